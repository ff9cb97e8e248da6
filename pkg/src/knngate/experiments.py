"""Monte Carlo sweeps over memory size checking the large-sample limits.

Every replicate draws a fresh memory from its own seed stream,

    SeedSequence(master_seed, spawn_key=(MEMORY_STREAM, n, rep)),

so results do not depend on execution order or thread count.
"""
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .discordance import asymptotic_target, evaluate
from .gating import GateInputs
from .memory import knn_query, knn_radius
from .report import ExperimentReport
from .retrieval import retriever_distribution, trust_weight
from .scenarios import bias_bounds, limiting_retriever, make_query, retriever_envelope, \
    sample_memory, support_distance
from .simplex import l1_distance, modal_label, top_gap

MEMORY_STREAM = 1
QUERY_STREAM = 2

EXPERIMENTS = ("mode_stability", "gate_limit", "trust_limit", "retriever_limit")
DEGENERACY_MARGIN = 1e-6


class InvalidQuery(ValueError):
    """A query or scenario violates the hypotheses of the requested experiment."""


def memory_seed(master_seed, n, rep):
    return np.random.SeedSequence(master_seed, spawn_key=(MEMORY_STREAM, n, rep))


def query_seed(master_seed, index):
    return np.random.SeedSequence(master_seed, spawn_key=(QUERY_STREAM, index))


def sample_queries(scenario, count, master_seed):
    """``count`` query points drawn through the scenario's deformation."""
    return tuple(tuple(make_query(scenario, query_seed(master_seed, i))[0].tolist())
                 for i in range(count))


def k_from_beta(n, beta):
    # guard against n**beta landing a hair above an exact integer
    return max(1, math.ceil(round(n ** beta, 9)))


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    scenario: object
    n_grid: tuple
    queries: tuple
    beta: float = 0.6
    k_list: tuple = None
    reps: int = 200
    zeta: float = 1.0
    delta: float = 0.3
    bandwidth: float = 1.0
    master_seed: int = 0
    threads: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ValueError("n_grid is empty")
        object.__setattr__(self, "n_grid", grid)
        qs = tuple(tuple(float(c) for c in np.asarray(q, float).reshape(-1)) for q in self.queries)
        if not qs:
            raise ValueError("no query points")
        for q in qs:
            if len(q) != self.scenario.d:
                raise ValueError(f"query {q} does not have dimension {self.scenario.d}")
        object.__setattr__(self, "queries", qs)
        if self.k_list is not None:
            ks = tuple(int(k) for k in self.k_list)
            if len(ks) != len(grid):
                raise ValueError("k_list must give one k per grid entry")
            object.__setattr__(self, "k_list", ks)
        elif not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        for n, k in zip(grid, self.ks):
            if not 1 <= k < n:
                raise ValueError(f"k = {k} for n = {n}: the k rule must give 1 <= k < n")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.zeta < 0:
            raise ValueError("zeta must be nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")

    @property
    def ks(self):
        if self.k_list is not None:
            return self.k_list
        return tuple(k_from_beta(n, self.beta) for n in self.n_grid)

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "scenario": self.scenario.to_dict(),
            "n_grid": list(self.n_grid),
            "k_list": list(self.ks),
            "beta": self.beta if self.k_list is None else None,
            "queries": [list(q) for q in self.queries],
            "reps": self.reps,
            "zeta": self.zeta,
            "delta": self.delta,
            "bandwidth": self.bandwidth,
            "master_seed": self.master_seed,
        }


def scenario_hash(scenario):
    blob = json.dumps(scenario.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# -- per-query preparation -------------------------------------------------------

def _require_aligned(config):
    if not config.scenario.aligned:
        raise InvalidQuery(f"{config.experiment} needs the aligned setting "
                         "(no deformation, rho = 0)")


def _in_support(config, x):
    dist, _, _ = support_distance(config.scenario.support_oracle(), x)
    if dist > 0.0:
        raise InvalidQuery(f"query {x.tolist()} lies outside the memory support")
    return dist


def _prepare_mode(config, x):
    sc = config.scenario
    dist = _in_support(config, x)
    p = sc.conditional_at(x)
    if top_gap(p) <= 0.0:
        raise InvalidQuery(f"query {x.tolist()} has no unique Bayes label (zero margin)")
    return {"support_distance": dist}, {"p": p, "y_star": modal_label(p)}


def _prepare_gate(config, x):
    info, ctx = _prepare_mode(config, x)
    sc = config.scenario
    q0 = sc.q0.build(sc, x)
    try:
        target = asymptotic_target(ctx["p"], q0)
    except ValueError as exc:
        raise InvalidQuery(f"query {x.tolist()}: {exc}") from None
    if abs(target.ell_bayes - target.ell0) <= DEGENERACY_MARGIN:
        raise InvalidQuery(f"query {x.tolist()}: Bayes and base cross-entropies coincide "
                         f"within {DEGENERACY_MARGIN}")
    structural = ctx["p"].at(target.y_star) - q0.at(target.y_star)
    info.update(target=target.limit_value, target_delta_x=structural)
    ctx.update(q0=q0, structural_sign=np.sign(structural))
    return info, ctx


def _prepare_trust(config, x):
    dist, _, _ = support_distance(config.scenario.support_oracle(), x)
    return {"support_distance": dist, "target": math.exp(-dist * dist)}, {}


def _prepare_retriever(config, x):
    sc = config.scenario
    dist, _, unique = support_distance(sc.support_oracle(), x)
    info = {"support_distance": dist}
    ctx = {"unique": unique}
    if unique:
        limit = limiting_retriever(sc, x)
        _, _, l1_bound = bias_bounds(sc, x)
        info.update(target=0.0, limit_l1=l1_distance(limit, sc.conditional_at(x)),
                    l1_bound=l1_bound)
        ctx["limit"] = limit
    else:
        ctx["envelope"] = retriever_envelope(sc, x)
    return info, ctx


# -- per-replicate metrics -----------------------------------------------------

def _mode_metrics(config, store, x, k, ctx):
    nb = knn_query(store, x, k)
    rhat = retriever_distribution(nb, store.n_labels)
    dev = float(np.max(np.abs(rhat.probs - ctx["p"].probs)))
    L = config.scenario.lipschitz
    radius_cut = config.delta / (2 * L) if L > 0 else math.inf
    return {
        "dev": dev,
        "dev_exceed": float(dev > config.delta),
        "mode_error": float(modal_label(rhat) != ctx["y_star"]),
        "radius_tail": float(knn_radius(nb) > radius_cut),
        "w": trust_weight(nb, config.bandwidth),
    }


def _gate_metrics(config, store, x, k, ctx):
    nb = knn_query(store, x, k)
    rhat = retriever_distribution(nb, store.n_labels)
    w = trust_weight(nb, config.bandwidth)
    dec, rec = evaluate(GateInputs(ctx["p"], ctx["q0"], rhat, w, config.zeta))
    return {
        "dev": float(np.max(np.abs(rhat.probs - ctx["p"].probs))),
        "mode_error": float(rec.y_r != ctx["y_star"]),
        "w": w,
        "delta_h": rec.delta_h,
        "delta_x": rec.delta_x,
        "sign_agree": float(np.sign(rec.delta_x) == ctx["structural_sign"]),
        "gate_on": dec.lam,
        "regime_a": float(rec.regime == "A"),
        "regime_b": float(rec.regime == "B"),
        "regime_c": float(rec.regime == "C"),
    }


def _trust_metrics(config, store, x, k, ctx):
    return {"w": trust_weight(knn_query(store, x, k), config.bandwidth)}


def _retriever_metrics(config, store, x, k, ctx):
    nb = knn_query(store, x, k)
    rhat = retriever_distribution(nb, store.n_labels)
    out = {"w": trust_weight(nb, config.bandwidth)}
    if ctx["unique"]:
        out["l1"] = l1_distance(rhat, ctx["limit"])
    else:
        lo, hi = ctx["envelope"]
        r = rhat.probs
        out["envelope_excess"] = float(np.max(np.maximum(np.maximum(lo - r, r - hi), 0.0)))
    return out


_KINDS = {
    "mode_stability": (_prepare_mode, _mode_metrics, True),
    "gate_limit": (_prepare_gate, _gate_metrics, True),
    "trust_limit": (_prepare_trust, _trust_metrics, False),
    "retriever_limit": (_prepare_retriever, _retriever_metrics, False),
}


def run(config, rep_indices=None, threads=None):
    """Run ``config.experiment`` and return its report.

    ``rep_indices`` selects which replicates to draw (default: all), so
    disjoint replicate sets can be run separately and pooled later.
    """
    prepare, metrics, aligned_only = _KINDS[config.experiment]
    if aligned_only:
        _require_aligned(config)
    reps = list(range(config.reps)) if rep_indices is None else sorted(set(rep_indices))
    xs = [np.asarray(q) for q in config.queries]
    prepared = [prepare(config, x) for x in xs]
    cell_info = {}
    for n, k in zip(config.n_grid, config.ks):
        for qi, (info, _) in enumerate(prepared):
            cell_info[(n, k, qi)] = {"x": ";".join(format(c, ".17g") for c in xs[qi]), **info}

    def task(item):
        n, k, rep = item
        store = sample_memory(config.scenario, n, memory_seed(config.master_seed, n, rep))
        return {(n, k, qi, rep): metrics(config, store, x, k, prepared[qi][1])
                for qi, x in enumerate(xs)}

    items = [(n, k, rep) for n, k in zip(config.n_grid, config.ks) for rep in reps]
    workers = max(1, int(threads if threads is not None else config.threads))
    rows = {}
    if workers == 1:
        for item in items:
            rows.update(task(item))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(task, items):
                rows.update(part)
    meta = {
        "schema_version": 1,
        "master_seed": config.master_seed,
        "scenario_hash": scenario_hash(config.scenario),
        "C": config.scenario.C,
        "delta": config.delta,
        "zeta": config.zeta,
        "bandwidth": config.bandwidth,
        "lipschitz": config.scenario.lipschitz,
        "seed_rule": "SeedSequence(master_seed, spawn_key=(1, n, rep))",
        "replicates": reps,
    }
    return ExperimentReport(config.experiment, meta, cell_info, rows)


def run_mode_stability(config, **kw):
    return run(_as(config, "mode_stability"), **kw)


def run_gate_limit(config, **kw):
    return run(_as(config, "gate_limit"), **kw)


def run_trust_limit(config, **kw):
    return run(_as(config, "trust_limit"), **kw)


def run_retriever_limit(config, **kw):
    return run(_as(config, "retriever_limit"), **kw)


def _as(config, experiment):
    if config.experiment == experiment:
        return config
    return replace(config, experiment=experiment)
