"""Compiled vs pure-Python kernels on the synchronous model-checking path.

    python benchmarks/bench_kernels.py [--repeat 3]

Each row tabulates successors and settle times for every configuration of a
random identifier-based table algorithm on an oriented ring.
"""

import argparse
import time

import numpy as np

from sslab import _pykernels, kernels
from sslab.model import make_ring

CASES = [(1, 8), (1, 12), (2, 6), (4, 3), (1, 16), (2, 8)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workload(mod, tables, ports, f, n, legal):
    succ = mod.sync_successors(tables, ports, f, n)
    mod.settle_times(succ, legal)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")

    rng = np.random.default_rng(0)
    print(f"{'f':>2} {'n':>3} {'configs':>9} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for f, n in CASES:
        ports = np.array(make_ring(n).ports, dtype=np.int64)
        tables = rng.integers(0, 1 << f, size=(n, 1 << (3 * f)), dtype=np.int64)
        total = 1 << (f * n)
        legal = rng.random(total) < 0.1
        slow = best_of(lambda: workload(_pykernels, tables, ports, f, n, legal), args.repeat)
        fast = best_of(lambda: workload(kernels.compiled, tables, ports, f, n, legal), args.repeat)
        print(f"{f:>2} {n:>3} {total:>9} {slow:>10.4f} {fast:>10.4f} {slow / fast:>7.1f}x")


if __name__ == "__main__":
    main()
