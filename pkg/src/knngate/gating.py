"""Per-query gate objective, the optimal hard gate and the soft-gate solver.

For a query with true conditional ``p``, base model ``q0``, retriever
``rhat`` and trust weight ``w``, the local objective is

    J(lam) = CE(p, (1 - lam) q0 + lam rhat) + zeta * lam * (1 - w)

which is convex in ``lam`` on [0, 1].
"""
import math
from dataclasses import dataclass

import numpy as np

from .simplex import ProbVec, cross_entropy

MAX_BISECTIONS = 200


class GateConvergenceError(RuntimeError):
    pass


def smooth(rhat, eps):
    """Additive smoothing ``(rhat + eps) / (1 + C eps)``; identity at eps = 0."""
    if eps < 0:
        raise ValueError("smoothing must be nonnegative")
    if eps == 0:
        return rhat
    return ProbVec((rhat.probs + eps) / (1.0 + rhat.C * eps))


@dataclass(frozen=True)
class GateInputs:
    p_true: ProbVec
    q0: ProbVec
    rhat: ProbVec
    w_fact: float
    zeta: float = 0.0
    smoothing: float = 0.0

    def __post_init__(self):
        if not (self.p_true.C == self.q0.C == self.rhat.C):
            raise ValueError("p_true, q0 and rhat must share the label count")
        if not 0.0 <= self.w_fact <= 1.0:
            raise ValueError(f"w_fact must lie in [0, 1], got {self.w_fact}")
        if not self.zeta >= 0.0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")
        if self.smoothing:
            object.__setattr__(self, "rhat", smooth(self.rhat, self.smoothing))

    @property
    def penalty(self):
        return self.zeta * (1.0 - self.w_fact)


@dataclass(frozen=True)
class GateDecision:
    lam: float
    ell0: float
    ellr: float
    penalty: float
    mixed: ProbVec
    mode: str


def mixture(q0, rhat, lam):
    """``(1 - lam) q0 + lam rhat``; the endpoints return the inputs unchanged."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if q0.C != rhat.C:
        raise ValueError("dimension mismatch")
    if lam == 0.0:
        return q0
    if lam == 1.0:
        return rhat
    return ProbVec((1.0 - lam) * q0.probs + lam * rhat.probs)


def local_objective(inputs, lam):
    ce = cross_entropy(inputs.p_true, mixture(inputs.q0, inputs.rhat, lam))
    return ce + lam * inputs.penalty


def objective_derivative(inputs, lam):
    """dJ/dlam, summed over labels supported by ``p_true``.

    Returns -inf / +inf at an endpoint where the mixture vanishes on a
    supported label (one-sided limit).
    """
    p = inputs.p_true.probs
    s = p > 0.0
    p, q, r = p[s], inputs.q0.probs[s], inputs.rhat.probs[s]
    mixed = (1.0 - lam) * q + lam * r
    diff = r - q
    if np.any(mixed == 0.0):
        # only possible at an endpoint; the blow-up term dominates
        zero = mixed == 0.0
        return -math.inf if np.any(diff[zero] > 0) else math.inf
    return float(-np.sum(p * diff / mixed)) + inputs.penalty


def hard_gate(inputs):
    """Optimal binary gate; equality keeps the base model (lam = 0)."""
    ell0 = cross_entropy(inputs.p_true, inputs.q0)
    ellr = cross_entropy(inputs.p_true, inputs.rhat)
    pen = inputs.penalty
    if ell0 <= ellr + pen:
        return GateDecision(0.0, ell0, ellr, pen, inputs.q0, "hard")
    return GateDecision(1.0, ell0, ellr, pen, inputs.rhat, "hard")


def soft_gate(inputs, tol=1e-10):
    """Minimize the local objective over lam in [0, 1] by bisection on dJ/dlam."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    ell0 = cross_entropy(inputs.p_true, inputs.q0)
    ellr = cross_entropy(inputs.p_true, inputs.rhat)
    lam = _solve(inputs, tol)
    return GateDecision(lam, ell0, ellr, inputs.penalty,
                        mixture(inputs.q0, inputs.rhat, lam), "soft")


def _solve(inputs, tol):
    # endpoint slopes within tol of zero count as stationary
    if objective_derivative(inputs, 0.0) >= -tol:
        return 0.0
    if objective_derivative(inputs, 1.0) <= tol:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        g = objective_derivative(inputs, mid)
        if math.isnan(g):
            raise GateConvergenceError(f"derivative is NaN at lambda={mid}")
        if abs(g) <= tol or mid in (lo, hi):
            return mid
        if g < 0.0:
            lo = mid
        else:
            hi = mid
    raise GateConvergenceError(
        f"no root of dJ/dlambda within {MAX_BISECTIONS} bisections "
        f"(bracket [{lo!r}, {hi!r}])")
