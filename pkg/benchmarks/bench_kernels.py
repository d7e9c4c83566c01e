"""Compare the compiled and pure-Python transfer-matrix kernels.

    python benchmarks/bench_kernels.py [--length 100000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from sturmkit._backend import BACKENDS
from sturmkit.cf import ContinuedFraction
from sturmkit.words import c_prefix


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--length", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    letters = c_prefix(ContinuedFraction.preset("fibonacci"), args.length).to_array()
    cps = np.unique(np.geomspace(1, args.length, 200).astype(np.int64))
    lam, E = 1.0, 0.6 + 0.1j
    rows = []
    for name, k in sorted(BACKENDS.items()):
        t_prod = best_of(lambda: k.product(letters, lam, E, 32), args.repeat)
        t_pref = best_of(lambda: k.prefix_lognorms(letters, lam, E, cps, 32), args.repeat)
        rows.append((name, t_prod, t_pref))
    print(f"{args.length} letters, best of {args.repeat}")
    print(f"{'backend':<8} {'product':>12} {'prefix norms':>14} {'ns/letter':>10}")
    for name, a, b in rows:
        print(f"{name:<8} {a * 1e3:10.2f}ms {b * 1e3:12.2f}ms {a / args.length * 1e9:10.1f}")
    if len(rows) == 2:
        print(f"speed-up: {rows[1][1] / rows[0][1]:.1f}x (product), {rows[1][2] / rows[0][2]:.1f}x (prefix norms)")


if __name__ == "__main__":
    main()
