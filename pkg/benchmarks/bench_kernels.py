#!/usr/bin/env python3
"""Benchmark the compiled information-density kernel against the numpy
fallback, plus the end-to-end DT bound that sits on top of it.

Usage: python benchmarks/bench_kernels.py [--samples 2e6] [--n 64]
"""

import argparse
import math
import time

import numpy as np

from icfading._kernels import get_backends
from icfading.fading import rayleigh


def bench_kernel(mod, x, h, z, a, sigma, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out, guarded = mod.scalar_info_density(x, h, z, a, sigma)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=lambda s: int(float(s)), default=2_000_000)
    parser.add_argument("--n", type=int, default=64, help="symbols per sample (workload shape)")
    args = parser.parse_args()

    total = args.samples
    rng = np.random.default_rng(0)
    a, sigma = 1e4, 1.0
    x = rng.uniform(-a / 2, a / 2, total)
    h = rayleigh().sample(rng, total)
    z = rng.normal(0.0, sigma, total)

    backends = get_backends()
    print(f"workload: {total:,} per-symbol evaluations "
          f"(think {total // args.n:,} samples x n={args.n})")
    print(f"{'backend':<10} {'best time':>12} {'Meval/s':>10}")
    results = {}
    for name, mod in backends.items():
        best, out = bench_kernel(mod, x, h, z, a, sigma)
        results[name] = (best, out)
        print(f"{name:<10} {best * 1e3:>10.1f} ms {total / best / 1e6:>10.1f}")

    if len(results) == 2:
        t_py, out_py = results["python"]
        t_cy, out_cy = results["cython"]
        print(f"speedup: {t_py / t_cy:.2f}x")
        worst = float(np.max(np.abs(out_py - out_cy)))
        print(f"max |python - cython| over the workload: {worst:.3e}")


if __name__ == "__main__":
    main()
