"""Benchmark the compiled vs pure-Python k-d tree query kernels.

Usage: python benchmarks/bench_kdtree.py [--sizes 10000,100000,500000]

Builds random clouds, queries 10k points through both kernels (plus a numpy
brute-force scan at small sizes as the exactness reference) and prints a
throughput table. Both kernels run on the identical prebuilt tree, so this
isolates the traversal loop, which dominates ICP and C2C runtime.
"""

import argparse
import time

import numpy as np

from amprint import _kdtree_py
from amprint.spatial import KDTREE_BACKEND, KDTree

N_QUERIES = 10_000
BRUTE_LIMIT = 20_000


def run_kernel(kernel, tree, queries):
    d2 = np.empty(len(queries))
    idx = np.empty(len(queries), dtype=np.int64)
    t0 = time.perf_counter()
    kernel.query_batch(
        tree._pts_perm, tree._perm, tree._axis, tree._split,
        tree._left, tree._right, tree._start, tree._end, queries, d2, idx,
    )
    return time.perf_counter() - t0, np.sqrt(d2), idx


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10000,100000,500000")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = np.random.default_rng(args.seed)
    queries = np.ascontiguousarray(rng.uniform(0.0, 254.0, (N_QUERIES, 3)))

    compiled = None
    if KDTREE_BACKEND == "compiled":
        from amprint import _kdtree_cy as compiled
    else:
        print("note: compiled kernel unavailable; showing the pure kernel only")

    header = f"{'points':>10} {'build (s)':>10} {'pure (q/s)':>12}"
    if compiled:
        header += f" {'compiled (q/s)':>15} {'speedup':>8}"
    header += f" {'brute check':>12}"
    print(header)

    for n in sizes:
        pts = rng.uniform(0.0, 254.0, (n, 3))
        t0 = time.perf_counter()
        tree = KDTree(pts)
        build_s = time.perf_counter() - t0

        t_pure, d_pure, i_pure = run_kernel(_kdtree_py, tree, queries)
        row = f"{n:>10} {build_s:>10.3f} {N_QUERIES / t_pure:>12.0f}"
        if compiled:
            t_comp, d_comp, i_comp = run_kernel(compiled, tree, queries)
            agree = np.array_equal(d_pure, d_comp) and np.array_equal(i_pure, i_comp)
            row += f" {N_QUERIES / t_comp:>15.0f} {t_pure / t_comp:>7.1f}x"
            if not agree:
                row += "  KERNEL MISMATCH"
        if n <= BRUTE_LIMIT:
            d2 = ((queries[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
            ib = d2.argmin(1)
            db = np.sqrt(d2[np.arange(len(queries)), ib])
            ok = np.array_equal(db, d_pure) and np.array_equal(ib, i_pure)
            row += f" {'exact' if ok else 'MISMATCH':>12}"
        else:
            row += f" {'(skipped)':>12}"
        print(row)


if __name__ == "__main__":
    main()
