"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call compiles (or loads the cache) and is timed separately.
"""
import argparse
import time

import numpy as np

from l0stable import kernels


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    x = np.linspace(-2, 2, 801)[:, None]
    f = 0.5 * x[:, 0] ** 2 + rng.normal(scale=0.01, size=(8, 801))
    yield "conjugate 8x801x801", kernels.conjugate_table_numba, kernels.conjugate_table_numpy, (x, f, x.copy())

    pts = rng.normal(size=(4000, 3))
    yield "greedy cover 4000 pts", kernels.greedy_cover_numba, kernels.greedy_cover_numpy, (pts, 0.5)

    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(40, 3)) + np.array([4.0, 0, 0])

    def many(fn):
        def run(a, b):
            for k in range(200):
                fn(a, b + k * 1e-3)
        return run

    yield "gjk distance x200", many(kernels.polytope_distance_numba), many(kernels.polytope_distance_numpy), (a, b)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"numba enabled: {kernels.USE_NUMBA}")
    print(f"{'kernel':<24}{'first call':>12}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, fast, slow, inputs in cases(rng):
        t0 = time.perf_counter()
        fast(*inputs)
        warm = time.perf_counter() - t0
        tf = _best(fast, inputs, args.repeat)
        ts = _best(slow, inputs, args.repeat)
        print(f"{name:<24}{warm:>12.4f}{tf:>12.5f}{ts:>12.5f}{ts / tf:>9.1f}x")


if __name__ == "__main__":
    main()
