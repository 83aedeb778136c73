# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled k-d tree query kernel; see _kdtree_py for the reference logic."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF STACK_MAX = 128


def query_batch(
    const double[:, ::1] pts,
    const long[::1] perm,
    const int[::1] axis,
    const double[::1] split,
    const int[::1] left,
    const int[::1] right,
    const int[::1] start,
    const int[::1] end,
    const double[:, ::1] queries,
    double[::1] out_d2,
    long[::1] out_idx,
):
    cdef Py_ssize_t n_q = queries.shape[0]
    cdef Py_ssize_t qi, k
    cdef int stack_nodes[STACK_MAX]
    cdef double stack_bounds[STACK_MAX]
    cdef int top, node, near, far, l, ax
    cdef long best_i, i
    cdef double qx, qy, qz, best_d2, bound, diff, dx, dy, dz, d2

    with nogil:
        for qi in range(n_q):
            qx = queries[qi, 0]
            qy = queries[qi, 1]
            qz = queries[qi, 2]
            best_d2 = 1e308
            best_i = -1
            top = 0
            node = 0
            bound = 0.0
            while True:
                if bound > best_d2:
                    if top == 0:
                        break
                    top -= 1
                    node = stack_nodes[top]
                    bound = stack_bounds[top]
                    continue
                l = left[node]
                if l < 0:
                    for k in range(start[node], end[node]):
                        dx = pts[k, 0] - qx
                        dy = pts[k, 1] - qy
                        dz = pts[k, 2] - qz
                        d2 = dx * dx + dy * dy + dz * dz
                        i = perm[k]
                        if d2 < best_d2 or (d2 == best_d2 and i < best_i):
                            best_d2 = d2
                            best_i = i
                    if top == 0:
                        break
                    top -= 1
                    node = stack_nodes[top]
                    bound = stack_bounds[top]
                else:
                    ax = axis[node]
                    diff = queries[qi, ax] - split[node]
                    if diff < 0.0:
                        near = l
                        far = right[node]
                    else:
                        near = right[node]
                        far = l
                    stack_nodes[top] = far
                    stack_bounds[top] = diff * diff
                    top += 1
                    node = near
            out_d2[qi] = best_d2
            out_idx[qi] = best_i
