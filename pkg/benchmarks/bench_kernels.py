"""Compare the compiled and pure-Python graph kernels on synthetic graphs.

Usage: python benchmarks/bench_kernels.py [nodes] [avg_degree]
"""

import sys
import time

import numpy as np

from chakit import _graphcore_py

try:
    from chakit import _graphcore
except ImportError:
    _graphcore = None


def random_csr(rng, n, deg):
    counts = rng.poisson(deg, size=n).clip(1, 4 * deg)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(counts)
    indices = rng.integers(0, n, size=int(indptr[-1]), dtype=np.int32)
    return indptr, indices


def reverse_csr(indptr, indices):
    n = len(indptr) - 1
    order = np.argsort(indices, kind="stable")
    rev_indices = np.repeat(np.arange(n, dtype=np.int32), np.diff(indptr))[order]
    counts = np.bincount(indices, minlength=n)
    rev_indptr = np.zeros(n + 1, dtype=np.int64)
    rev_indptr[1:] = np.cumsum(counts)
    return rev_indptr, rev_indices


def bench(module, name, graphs):
    indptr, indices, rev_indptr, rev_indices, f, g, ex, target = graphs
    t0 = time.perf_counter()
    module.reach(indptr, indices, g)
    module.eu_fixpoint(rev_indptr, rev_indices, f, g)
    module.eg_fixpoint(indptr, indices, rev_indptr, rev_indices, f,
                       np.zeros(len(f), dtype=np.uint8))
    module.attractor(indptr, indices, rev_indptr, rev_indices, ex, target)
    dt = time.perf_counter() - t0
    print(f"{name:<10} {dt * 1000:10.1f} ms")
    return dt


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    deg = int(sys.argv[2]) if len(sys.argv) > 2 else 4
    rng = np.random.default_rng(7)
    indptr, indices = random_csr(rng, n, deg)
    rev_indptr, rev_indices = reverse_csr(indptr, indices)
    f = (rng.random(n) < 0.9).astype(np.uint8)
    g = (rng.random(n) < 0.01).astype(np.uint8)
    ex = (rng.random(n) < 0.5).astype(np.uint8)
    target = (rng.random(n) < 0.02).astype(np.uint8)
    graphs = (indptr, indices, rev_indptr, rev_indices, f, g, ex, target)
    print(f"graph: {n} nodes, {len(indices)} edges")
    t_py = bench(_graphcore_py, "python", graphs)
    if _graphcore is None:
        print("compiled kernels unavailable (extension not built)")
    else:
        t_c = bench(_graphcore, "compiled", graphs)
        print(f"speedup: {t_py / t_c:.1f}x")


if __name__ == "__main__":
    main()
