"""Exact nearest-neighbor search over 3D point sets.

A balanced k-d tree built with numpy; the per-query traversal kernel is the
hot loop and comes in two interchangeable flavors: a Cython extension
(amprint._kdtree_cy) and a pure-Python fallback (amprint._kdtree_py). The
compiled kernel is picked automatically at import when present; set
AMPRINT_NO_EXT=1 to force the fallback. Both return bit-identical results.

Queries are exact (no approximation): ties on distance resolve to the
smallest point index, matching a first-occurrence argmin brute-force scan.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("AMPRINT_NO_EXT"):
    from . import _kdtree_py as _kernel

    KDTREE_BACKEND = "pure"
else:
    try:
        from . import _kdtree_cy as _kernel  # type: ignore[attr-defined]

        KDTREE_BACKEND = "compiled"
    except ImportError:
        from . import _kdtree_py as _kernel

        KDTREE_BACKEND = "pure"

_LEAF_SIZE = 16


class KDTree:
    """Balanced, median-split k-d tree over an immutable (n, 3) point set."""

    backend = KDTREE_BACKEND

    def __init__(self, points, leaf_size: int = _LEAF_SIZE):
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError("points must be an (n, 3) array")
        if len(points) == 0:
            raise ValueError("cannot index an empty point set")
        self.points = points
        self._build(leaf_size)

    def _build(self, leaf_size):
        n = len(self.points)
        perm = np.arange(n, dtype=np.int64)
        max_nodes = 4 * max(1, n // leaf_size) + 64
        axis = np.zeros(max_nodes, dtype=np.int32)
        split = np.zeros(max_nodes, dtype=np.float64)
        left = np.full(max_nodes, -1, dtype=np.int32)
        right = np.full(max_nodes, -1, dtype=np.int32)
        start = np.zeros(max_nodes, dtype=np.int32)
        end = np.zeros(max_nodes, dtype=np.int32)

        n_nodes = 1
        stack = [(0, 0, n)]  # node id, range in perm
        while stack:
            node, lo, hi = stack.pop()
            start[node], end[node] = lo, hi
            if hi - lo <= leaf_size:
                continue
            sub = self.points[perm[lo:hi]]
            extent = sub.max(axis=0) - sub.min(axis=0)
            ax = int(np.argmax(extent))  # ties pick the lowest axis
            mid = (lo + hi) // 2
            order = np.argpartition(sub[:, ax], mid - lo)
            perm[lo:hi] = perm[lo:hi][order]
            axis[node] = ax
            split[node] = self.points[perm[mid], ax]
            left[node] = n_nodes
            right[node] = n_nodes + 1
            n_nodes += 2
            stack.append((left[node], lo, mid))
            stack.append((right[node], mid, hi))

        self._perm = perm
        self._pts_perm = np.ascontiguousarray(self.points[perm])
        self._axis = axis[:n_nodes].copy()
        self._split = split[:n_nodes].copy()
        self._left = left[:n_nodes].copy()
        self._right = right[:n_nodes].copy()
        self._start = start[:n_nodes].copy()
        self._end = end[:n_nodes].copy()

    def query(self, queries):
        """Nearest neighbor for each query point.

        Returns (distances, indices) into the original point set; accepts a
        single (3,) point or an (m, 3) batch.
        """
        q = np.ascontiguousarray(queries, dtype=np.float64)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        if q.shape[1] != 3:
            raise ValueError("queries must have 3 columns")
        d2 = np.empty(len(q), dtype=np.float64)
        idx = np.empty(len(q), dtype=np.int64)
        _kernel.query_batch(
            self._pts_perm, self._perm, self._axis, self._split,
            self._left, self._right, self._start, self._end, q, d2, idx,
        )
        dist = np.sqrt(d2)
        if single:
            return float(dist[0]), int(idx[0])
        return dist, idx
