"""Compiled vs numpy kernels.

    python3 benchmarks/bench_kernels.py [--walk-steps 256 512 1024] [--repeat 3]

Prints the best-of-N wall time of each kernel for both backends and the
speed-up.  The compiled backend must be built (``pip install -e .``).
"""

import argparse
import time

import numpy as np

from spinpointer import _pykernels

try:
    from spinpointer import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def walk(mod, L):
    buf = np.zeros((L + 1, L + 1, 2), dtype=complex)
    buf[0, 0] = (1.0, 0.0)
    for t in range(L):
        mod.walk_step(buf, t)
    return buf


def cases(walk_steps):
    rng = np.random.default_rng(0)
    z = rng.uniform(0.0, 200.0, 1_000_000)
    k = np.sort(rng.uniform(0.0, 500.0, 20_000))
    w = rng.normal(size=k.size)
    r = np.linspace(0.0, 1.2, 200)
    yield "bessel J0, 1e6 points", lambda m: m.bessel(0, z)
    yield "bessel J1, 1e6 points", lambda m: m.bessel(1, z)
    yield "weighted sum, 2e4 nodes x 200 radii", lambda m: m.bessel_weighted_sum(1, k, w, r)
    for L in walk_steps:
        yield f"walk L={L}", lambda m, L=L: walk(m, L)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--walk-steps", type=int, nargs="+", default=[256, 512])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled backend not built; only numpy timings shown")
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'compiled [s]':>13s} {'speed-up':>9s}")
    for name, fn in cases(args.walk_steps):
        tp = best_of(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:40s} {tp:10.4f} {'-':>13s} {'-':>9s}")
            continue
        tc = best_of(lambda: fn(_ckernels), args.repeat)
        print(f"{name:40s} {tp:10.4f} {tc:13.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
