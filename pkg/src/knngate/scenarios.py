"""Synthetic worlds with known conditionals, supports and limits.

A scenario couples a memory input law, a softmax-affine true conditional,
a frozen base model, a query deformation and a label-corruption process.
Memory pairs are drawn as ``U ~ law``, ``V | U ~ (1 - rho) P(.|U) + rho s``;
queries as ``X = T(U)`` with labels following ``P(.|X)``.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np

from .memory import MemoryStore
from .simplex import ProbVec, l1_distance

LIPSCHITZ_SLACK = 1e-12


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(int(seed))


def _vec(values, d=None, name="vector"):
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if d is not None and arr.size != d:
        raise ValueError(f"{name} must have {d} entries, got {arr.size}")
    return arr


def _norm(v, norm):
    if norm == "l2":
        return float(np.sqrt(np.sum(np.square(v))))
    if norm == "l1":
        return float(np.sum(np.abs(v)))
    if norm == "linf":
        return float(np.max(np.abs(v)))
    raise ValueError(f"unknown norm {norm!r}")


_DUAL = {"l2": "l2", "l1": "linf", "linf": "l1"}


# -- memory input laws --------------------------------------------------------

@dataclass(frozen=True)
class UniformBall:
    """Uniform law on the Euclidean ball of given radius around the origin."""
    radius: float = 1.0
    kind: str = field(default="uniform_ball", init=False)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def sample(self, rng, n, d):
        g = rng.standard_normal((n, d))
        g /= np.sqrt(np.sum(g * g, axis=1, keepdims=True))
        r = self.radius * rng.random(n) ** (1.0 / d)
        return g * r[:, None]

    def nearest(self, x, norm):
        if norm != "l2":
            raise ValueError("ball support distance is closed-form only under the l2 norm")
        r = _norm(x, "l2")
        if r <= self.radius:
            return 0.0, x.copy(), True
        return r - self.radius, x * (self.radius / r), True

    def params(self):
        return {"radius": self.radius}


@dataclass(frozen=True)
class UniformBox:
    low: tuple
    high: tuple
    kind: str = field(default="uniform_box", init=False)

    def __post_init__(self):
        lo, hi = np.asarray(self.low, float), np.asarray(self.high, float)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs matching bounds with low < high")
        object.__setattr__(self, "low", tuple(lo.tolist()))
        object.__setattr__(self, "high", tuple(hi.tolist()))

    def sample(self, rng, n, d):
        lo, hi = np.asarray(self.low), np.asarray(self.high)
        if lo.size != d:
            raise ValueError(f"box has dimension {lo.size}, scenario has {d}")
        return lo + (hi - lo) * rng.random((n, d))

    def nearest(self, x, norm):
        u = np.clip(x, self.low, self.high)
        dist = _norm(x - u, norm)
        # clipping is the unique minimizer for l1 and l2; under linf the
        # nearest set is a box with nonzero extent whenever x is outside
        unique = norm != "linf" or dist == 0.0
        return dist, u, unique

    def nearest_set_bounds(self, x, norm):
        """Axis-aligned bounds of the nearest set (a box) under the linf norm."""
        dist, u, _ = self.nearest(x, norm)
        if norm != "linf":
            return u, u
        lo = np.maximum(np.asarray(self.low), x - dist)
        hi = np.minimum(np.asarray(self.high), x + dist)
        return lo, hi

    def params(self):
        return {"low": list(self.low), "high": list(self.high)}


@dataclass(frozen=True)
class Gaussian:
    mean: tuple
    scale: float = 1.0
    kind: str = field(default="gaussian", init=False)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("gaussian scale must be positive")
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))

    def sample(self, rng, n, d):
        mu = np.asarray(self.mean)
        if mu.size != d:
            raise ValueError(f"gaussian mean has dimension {mu.size}, scenario has {d}")
        return mu + self.scale * rng.standard_normal((n, d))

    def nearest(self, x, norm):
        return 0.0, x.copy(), True

    def params(self):
        return {"mean": list(self.mean), "scale": self.scale}


# -- deformations ---------------------------------------------------------------

@dataclass(frozen=True)
class NoDeformation:
    kind: str = field(default="none", init=False)

    def apply(self, u):
        return u.copy()

    def params(self):
        return {}


@dataclass(frozen=True)
class ConstantShift:
    shift: tuple
    kind: str = field(default="constant_shift", init=False)

    def __post_init__(self):
        object.__setattr__(self, "shift", tuple(float(c) for c in self.shift))

    def apply(self, u):
        return u + np.asarray(self.shift)

    def params(self):
        return {"shift": list(self.shift)}


@dataclass(frozen=True)
class RadialPush:
    """Moves every nonzero point outward by ``t`` along its Euclidean ray."""
    t: float
    kind: str = field(default="radial_push", init=False)

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError("radial push must be nonnegative")

    def apply(self, u):
        r = float(np.sqrt(np.sum(np.square(u))))
        if r == 0.0:
            return u.copy()
        return u * (1.0 + self.t / r)

    def params(self):
        return {"t": self.t}


# -- spurious label laws -------------------------------------------------------

@dataclass(frozen=True)
class UniformSpurious:
    kind: str = field(default="uniform", init=False)

    def dist(self, C):
        return ProbVec.uniform(C)

    def params(self):
        return {}


@dataclass(frozen=True)
class PointMassSpurious:
    label: int
    kind: str = field(default="point_mass", init=False)

    def dist(self, C):
        return ProbVec.point_mass(self.label, C)

    def params(self):
        return {"label": self.label}


# -- base-model builders --------------------------------------------------------

@dataclass(frozen=True)
class BayesQ0:
    kind: str = field(default="bayes", init=False)

    def build(self, scenario, x):
        return scenario.conditional_at(x)

    def params(self):
        return {}


@dataclass(frozen=True)
class TemperedQ0:
    tau: float
    kind: str = field(default="tempered", init=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("temperature exponent must be positive")

    def build(self, scenario, x):
        return ProbVec(_softmax(self.tau * scenario.scores(x)))

    def params(self):
        return {"tau": self.tau}


@dataclass(frozen=True)
class ShiftedQ0:
    offset: tuple
    kind: str = field(default="shifted", init=False)

    def __post_init__(self):
        object.__setattr__(self, "offset", tuple(float(c) for c in self.offset))

    def build(self, scenario, x):
        return scenario.conditional_at(np.asarray(x, float) + _vec(self.offset, scenario.d, "offset"))

    def params(self):
        return {"offset": list(self.offset)}


@dataclass(frozen=True)
class ContaminatedQ0:
    alpha: float
    kind: str = field(default="contaminated", init=False)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("contamination must lie in [0, 1]")

    def build(self, scenario, x):
        p = scenario.conditional_at(x).probs
        if self.alpha == 1.0:
            return ProbVec.uniform(p.size)
        return ProbVec((1.0 - self.alpha) * p + self.alpha / p.size)

    def params(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class PermutedQ0:
    """``q0(y|x) = P(perm[y]|x)`` with a 1-based label permutation."""
    perm: tuple
    kind: str = field(default="permuted", init=False)

    def __post_init__(self):
        perm = tuple(int(v) for v in self.perm)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise ValueError(f"{perm} is not a permutation of 1..{len(perm)}")
        object.__setattr__(self, "perm", perm)

    def build(self, scenario, x):
        if len(self.perm) != scenario.C:
            raise ValueError("permutation length differs from label count")
        p = scenario.conditional_at(x).probs
        return ProbVec(p[np.asarray(self.perm) - 1])

    def params(self):
        return {"perm": list(self.perm)}


def _softmax(z):
    z = z - np.max(z)
    e = np.exp(z)
    return e / e.sum()


LAWS = {"uniform_ball": UniformBall, "uniform_box": UniformBox, "gaussian": Gaussian}
DEFORMATIONS = {"none": NoDeformation, "constant_shift": ConstantShift, "radial_push": RadialPush}
SPURIOUS = {"uniform": UniformSpurious, "point_mass": PointMassSpurious}
Q0_BUILDERS = {"bayes": BayesQ0, "tempered": TemperedQ0, "shifted": ShiftedQ0,
               "contaminated": ContaminatedQ0, "permuted": PermutedQ0}


# -- scenario ------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Generative world with a softmax-affine conditional ``P(y|x) ∝ exp(a_y.x + b_y)``.

    ``lipschitz`` defaults to half the largest dual-norm gap between weight
    vectors, which bounds both the per-label and the summed (L1) Lipschitz
    constants of the conditional under ``norm``. A user-supplied value must
    not be smaller.
    """
    weights: tuple
    offsets: tuple
    memory_law: object = UniformBall()
    q0: object = BayesQ0()
    deformation: object = NoDeformation()
    rho: float = 0.0
    spurious: object = UniformSpurious()
    norm: str = "l2"
    lipschitz: float = None

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
            raise ValueError("weights must be a (C, d) matrix")
        b = _vec(self.offsets, W.shape[0], "offsets")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.norm not in _DUAL:
            raise ValueError(f"unknown norm {self.norm!r}")
        if isinstance(self.spurious, PointMassSpurious) and not 1 <= self.spurious.label <= W.shape[0]:
            raise ValueError("spurious point mass outside the label set")
        object.__setattr__(self, "weights", tuple(tuple(row) for row in W.tolist()))
        object.__setattr__(self, "offsets", tuple(b.tolist()))
        bound = 0.5 * max((_norm(W[i] - W[j], _DUAL[self.norm])
                           for i, j in itertools.combinations(range(W.shape[0]), 2)),
                          default=0.0)
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", bound)
        elif self.lipschitz < bound:
            raise ValueError(f"lipschitz={self.lipschitz} is below the certified bound {bound}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "_W", W)
        object.__setattr__(self, "_b", b)

    @property
    def d(self):
        return self._W.shape[1]

    @property
    def C(self):
        return self._W.shape[0]

    @property
    def aligned(self):
        return isinstance(self.deformation, NoDeformation) and self.rho == 0.0

    def scores(self, x):
        return self._W @ _vec(x, self.d, "query") + self._b

    def conditional_at(self, x):
        return ProbVec(_softmax(self.scores(x)))

    def conditional_matrix(self, points):
        z = points @ self._W.T + self._b
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def spurious_at(self, u=None):
        return self.spurious.dist(self.C)

    def memory_conditional(self, u):
        return corrupt(self.conditional_at(u), self.rho, self.spurious_at(u))

    def support_oracle(self):
        return SupportOracle(self.memory_law, self.norm)

    def to_dict(self):
        out = {
            "weights": [list(r) for r in self.weights],
            "offsets": list(self.offsets),
            "norm": self.norm,
            "rho": self.rho,
            "lipschitz": self.lipschitz,
        }
        for key, part in (("memory_law", self.memory_law), ("q0", self.q0),
                          ("deformation", self.deformation), ("spurious", self.spurious)):
            out[key] = {"kind": part.kind, **part.params()}
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        parts = {}
        for key, table, default in (("memory_law", LAWS, "uniform_ball"),
                                    ("q0", Q0_BUILDERS, "bayes"),
                                    ("deformation", DEFORMATIONS, "none"),
                                    ("spurious", SPURIOUS, "uniform")):
            spec = dict(data.pop(key, {"kind": default}))
            kind = spec.pop("kind", default)
            if kind not in table:
                raise KeyError(f"{key}.kind: unknown value {kind!r}; expected one of {sorted(table)}")
            parts[key] = table[kind](**spec)
        return cls(**data, **parts)


@dataclass(frozen=True)
class SupportOracle:
    law: object
    norm: str = "l2"


def support_distance(oracle, x):
    """Distance from ``x`` to the closed support, the nearest point, and uniqueness."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return oracle.law.nearest(x, oracle.norm)


def corrupt(p_true, rho, s):
    """``(1 - rho) p_true + rho s``."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if rho == 0.0:
        return p_true
    if rho == 1.0:
        return s
    return ProbVec((1.0 - rho) * p_true.probs + rho * s.probs)


def q0_build(spec, scenario, x):
    return spec.build(scenario, np.asarray(x, dtype=np.float64))


def sample_memory(scenario, n, seed):
    """n i.i.d. memory pairs; deterministic given ``seed``."""
    if n < 1:
        raise ValueError("memory size must be at least 1")
    rng = make_rng(seed)
    pts = scenario.memory_law.sample(rng, n, scenario.d)
    probs = scenario.conditional_matrix(pts)
    if scenario.rho > 0.0:
        probs = (1.0 - scenario.rho) * probs + scenario.rho * scenario.spurious_at().probs
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(n)
    labels = 1 + np.sum(cdf[:, :-1] <= u[:, None], axis=1)
    return MemoryStore(pts, labels, scenario.C, scenario.norm)


def make_query(scenario, seed):
    """Draw ``U``, deform it, and return ``(x, P(.|x))``."""
    rng = make_rng(seed)
    u = scenario.memory_law.sample(rng, 1, scenario.d)[0]
    x = scenario.deformation.apply(u)
    return x, scenario.conditional_at(x)


def limiting_retriever(scenario, x):
    """Large-memory limit of the retriever at ``x`` (requires a unique nearest point)."""
    _, u_x, unique = support_distance(scenario.support_oracle(), x)
    if not unique:
        raise ValueError("nearest support point is not unique; no single limit exists")
    return scenario.memory_conditional(u_x)


def bias_bounds(scenario, x):
    """``(delta_geom, delta_sem, (1 - rho) delta_geom + rho delta_sem)`` at ``x``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    dist, u_x, unique = support_distance(scenario.support_oracle(), x)
    if not unique:
        raise ValueError("nearest support point is not unique")
    p_x = scenario.conditional_at(x)
    delta_geom = l1_distance(scenario.conditional_at(u_x), p_x)
    delta_sem = l1_distance(scenario.spurious_at(u_x), p_x)
    if delta_geom > scenario.lipschitz * dist + LIPSCHITZ_SLACK:
        raise RuntimeError(
            f"geometric bias {delta_geom} exceeds L * d(x, S) = {scenario.lipschitz * dist}")
    rho = scenario.rho
    return delta_geom, delta_sem, (1.0 - rho) * delta_geom + rho * delta_sem


def retriever_envelope(scenario, x, per_axis=9):
    """Per-label min/max of the memory conditional over the nearest set.

    Exact when the nearest point is unique; otherwise the nearest set is a
    box (linf norm) scanned on a regular grid, so the envelope is approximate.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    law = scenario.memory_law
    if isinstance(law, UniformBox):
        lo, hi = law.nearest_set_bounds(x, scenario.norm)
    else:
        _, u, _ = support_distance(scenario.support_oracle(), x)
        lo = hi = u
    axes = [np.linspace(a, b, per_axis) if b > a else np.array([a]) for a, b in zip(lo, hi)]
    grid = np.array(list(itertools.product(*axes)))
    probs = scenario.conditional_matrix(grid)
    if scenario.rho > 0.0:
        probs = (1.0 - scenario.rho) * probs + scenario.rho * scenario.spurious_at().probs
    return probs.min(axis=0), probs.max(axis=0)

