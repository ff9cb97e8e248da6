"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 runtime error.
"""
import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import __version__, _backend
from .config import ConfigError, load_config
from .discordance import discordance_record
from .experiments import InvalidQuery, run
from .gating import GateConvergenceError, GateInputs, hard_gate, soft_gate
from .memory import MemoryStore, knn_query, knn_radius
from .plot import render_svg
from .report import read_csv
from .retrieval import retriever_distribution, trust_weight
from .scenarios import sample_memory
from .simplex import ProbVec

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class InputError(ValueError):
    pass


def _vector(text, name):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _probvec(text, name):
    try:
        return ProbVec(_vector(text, name))
    except ValueError as exc:
        raise InputError(f"--{name}: {exc}") from None


def _json_float(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def cmd_gate(args):
    try:
        store = MemoryStore.load(args.memory)
    except OSError as exc:
        raise InputError(f"--memory: cannot read {args.memory}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"--memory: {exc}") from None
    x = _vector(args.query, "query")
    if x.size != store.d:
        raise InputError(f"--query has {x.size} coordinates but the store has dimension {store.d}")
    if not 1 <= args.k <= store.n:
        raise InputError(f"--k must satisfy 1 <= k <= n = {store.n}, got {args.k}")
    if args.zeta < 0:
        raise InputError("--zeta must be nonnegative")
    if not args.bandwidth > 0:
        raise InputError("--bandwidth must be positive")

    scenario = load_config(args.config).scenario if args.config else None
    if args.p_true:
        p_true = _probvec(args.p_true, "p-true")
    elif scenario is not None:
        p_true = scenario.conditional_at(x)
    else:
        raise InputError("give --p-true or --config to define the true conditional")
    if args.q0:
        q0 = _probvec(args.q0, "q0")
    elif scenario is not None:
        q0 = scenario.q0.build(scenario, x)
    else:
        raise InputError("give --q0 or --config to define the base model")
    if not p_true.C == q0.C == store.n_labels:
        raise InputError(f"label counts differ: p_true {p_true.C}, q0 {q0.C}, "
                         f"store {store.n_labels}")

    nb = knn_query(store, x, args.k)
    rhat = retriever_distribution(nb, store.n_labels)
    w = trust_weight(nb, args.bandwidth)
    inputs = GateInputs(p_true, q0, rhat, w, args.zeta, args.smoothing)
    dec = hard_gate(inputs) if args.mode == "hard" else soft_gate(inputs, args.tol)
    rec = discordance_record(inputs, dec)
    out = {
        "k": nb.k,
        "neighbors": nb.indices.tolist(),
        "radius": knn_radius(nb),
        "w_fact": w,
        "rhat": inputs.rhat.probs.tolist(),
        "mode": dec.mode,
        "lambda": dec.lam,
        "ell0": _json_float(dec.ell0),
        "ellr": _json_float(dec.ellr),
        "penalty": dec.penalty,
        "mixed": dec.mixed.probs.tolist(),
        "y_r": rec.y_r,
        "h_q0": rec.h_q0,
        "h_mixed": rec.h_mixed,
        "delta_h": rec.delta_h,
        "delta_x": rec.delta_x,
        "regime": rec.regime,
    }
    sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    return 0


def cmd_simulate(args):
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise InputError("--seed must be nonnegative")
        config = replace(config, master_seed=args.seed)
    threads = args.threads if args.threads is not None else config.threads
    os.makedirs(args.out, exist_ok=True)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    report = run(config, threads=threads)
    elapsed = time.perf_counter() - t0
    paths = {name: os.path.join(args.out, name)
             for name in ("report.csv", "report.json", "manifest.json")}
    csv_text, json_text = report.to_csv(), report.to_json()
    with open(paths["report.csv"], "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    with open(paths["report.json"], "w", encoding="utf-8") as fh:
        fh.write(json_text)
    manifest = {
        "tool": "knngate",
        "version": __version__,
        "config_path": os.path.abspath(args.config),
        "seed_override": args.seed,
        "resolved_config": config.to_dict(),
        "outputs": {k: os.path.abspath(v) for k, v in paths.items()},
        "threads": threads,
        "knn_backend": _backend.BACKEND,
        "started_at": started.isoformat(),
        "wall_seconds": elapsed,
    }
    with open(paths["manifest.json"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.format == "csv":
        sys.stdout.write(csv_text)
    elif args.format == "json":
        sys.stdout.write(json_text)
    return 0


def cmd_plot(args):
    try:
        _, rows = read_csv(args.report)
    except OSError as exc:
        raise InputError(f"cannot read {args.report}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        svg = render_svg(rows, args.metric)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return 0


def cmd_memory(args):
    config = load_config(args.config)
    if args.n < 1:
        raise InputError("--n must be at least 1")
    store = sample_memory(config.scenario, args.n, args.seed)
    store.save(args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="knngate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gate", help="evaluate the gate at one query against a memory file")
    g.add_argument("--memory", required=True, help="binary memory store")
    g.add_argument("--query", required=True, help="comma-separated coordinates")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--zeta", type=float, default=0.0)
    g.add_argument("--bandwidth", type=float, default=1.0)
    g.add_argument("--mode", choices=("hard", "soft"), default="hard")
    g.add_argument("--p-true", help="true conditional at the query, comma-separated")
    g.add_argument("--q0", help="base-model distribution at the query, comma-separated")
    g.add_argument("--config", help="config whose scenario supplies p_true and q0")
    g.add_argument("--smoothing", type=float, default=0.0, help="additive smoothing of r-hat")
    g.add_argument("--tol", type=float, default=1e-10, help="soft-gate derivative tolerance")
    g.set_defaults(func=cmd_gate)

    s = sub.add_parser("simulate", help="run a Monte Carlo sweep from a config file")
    s.add_argument("--config", required=True, help="TOML config or a previous manifest.json")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override master_seed")
    s.add_argument("--threads", type=int, help="parallel replicate cap")
    s.add_argument("--format", choices=("csv", "json"), help="also echo the report to stdout")
    s.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="SVG chart of a report metric against n")
    p.add_argument("report", help="report.csv from simulate")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--metric", help="CSV column to plot (default depends on experiment)")
    p.set_defaults(func=cmd_plot)

    m = sub.add_parser("memory", help="sample a memory store from a config's scenario")
    m.add_argument("--config", required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_memory)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError, InvalidQuery) as exc:
        print(f"knngate {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GateConvergenceError, OSError, ValueError, RuntimeError) as exc:
        print(f"knngate {args.command}: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
