"""Compare the compiled and numpy kernels on random instances.

    python3 benchmarks/bench_kernels.py [--sizes 200 1000 3000] [--m 10] [--repeat 3]

Prints one row per (kernel, n) with the best-of-``repeat`` time in ms and
checks that both implementations return identical picks.
"""

import argparse
import time

import numpy as np

from scenred import kernels


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 1000, 3000])
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--dim", type=int, default=24)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = {"python": kernels.load("python")}
    try:
        impls["cython"] = kernels.load("cython")
    except ImportError:
        print("compiled kernels not built; only the numpy fallback is timed")
    print(f"{'kernel':<8} {'n':>6} {'sq_euclidean_ms':>16} {'forward_select_ms':>18}")
    for n in args.sizes:
        rng = np.random.default_rng(n)
        X = rng.uniform(size=(n, args.dim))
        p = rng.dirichlet(np.ones(n))
        picks = {}
        for name, k in impls.items():
            t_d, C = best_of(lambda: k.sq_euclidean(X), args.repeat)
            t_f, (pk, _) = best_of(lambda: k.forward_select(C, p, min(args.m, n)), args.repeat)
            picks[name] = list(pk)
            print(f"{name:<8} {n:>6} {t_d:>16.2f} {t_f:>18.2f}")
        if len(set(map(tuple, picks.values()))) != 1:
            raise SystemExit(f"kernels disagree at n={n}: {picks}")


if __name__ == "__main__":
    main()
