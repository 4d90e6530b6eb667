"""Compare the compiled and NumPy step kernels.

Usage: python benchmarks/bench_step.py [--steps 300] [--repeat 3]
"""

import argparse
import time

import numpy as np

from triwalk.coin import SYMMETRIC_STATE, grover_coin
from triwalk.engine import WalkRun, available_backends, evolve, get_kernel


def time_evolve(backend, steps, repeat):
    run = WalkRun(grover_coin(), SYMMETRIC_STATE, steps)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        evolve(run, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def time_single_step(backend, size, repeat):
    rng = np.random.default_rng(0)
    amp = rng.normal(size=(size, size, 3)) + 1j * rng.normal(size=(size, size, 3))
    coin = grover_coin().entries
    kernel = get_kernel(backend)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        kernel(amp, coin)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'backend':<8} {'evolve T=%d [s]' % args.steps:>18} {'step 601x601 [ms]':>18}")
    results = {}
    for b in backends:
        ev = time_evolve(b, args.steps, args.repeat)
        st = time_single_step(b, 2 * args.steps + 1, args.repeat)
        results[b] = ev
        print(f"{b:<8} {ev:>18.3f} {st * 1e3:>18.2f}")
    if "cython" in results:
        print(f"speedup (numpy / cython): {results['numpy'] / results['cython']:.2f}x")


if __name__ == "__main__":
    main()
