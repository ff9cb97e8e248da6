"""Time the compiled k-NN scan against the numpy fallback.

    python3 benchmarks/bench_knn.py [--n 200000] [--d 2] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from knngate import _pykernels

try:
    from knngate import _ckernels
except ImportError:
    _ckernels = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernel not built; run `pip install -e .` first")

    rng = np.random.default_rng(0)
    pts = rng.standard_normal((args.n, args.d))
    x = rng.standard_normal(args.d)
    print(f"n={args.n} d={args.d}, best of {args.repeat} calls (ms)")
    print(f"{'norm':>5} {'k':>6} {'numpy':>9} {'cython':>9} {'speedup':>8}  identical")
    for code, norm in enumerate(("l2", "l1", "linf")):
        for k in (1, 96, int(np.ceil(args.n ** 0.6))):
            k = min(k, args.n)
            times = {}
            for name, fn in (("numpy", _pykernels.knn_scan), ("cython", _ckernels.knn_scan)):
                times[name] = min(timeit.repeat(lambda: fn(pts, x, k, code),
                                                number=1, repeat=args.repeat)) * 1e3
            pi, pd = _pykernels.knn_scan(pts, x, k, code)
            ci, cd = _ckernels.knn_scan(pts, x, k, code)
            same = np.array_equal(pi, ci) and np.array_equal(pd, cd)
            print(f"{norm:>5} {k:>6} {times['numpy']:>9.3f} {times['cython']:>9.3f} "
                  f"{times['numpy'] / times['cython']:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
