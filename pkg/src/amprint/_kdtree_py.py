"""Pure-Python k-d tree query kernel (fallback for the Cython extension).

Must stay behaviorally identical to _kdtree_cy.query_batch: same traversal,
same tie-breaking (smallest original index on equal distance), same floats.
"""

from __future__ import annotations


def query_batch(pts, perm, axis, split, left, right, start, end, queries, out_d2, out_idx):
    n_q = len(queries)
    stack_nodes = [0] * 80
    stack_bounds = [0.0] * 80

    for qi in range(n_q):
        qx = queries[qi, 0]
        qy = queries[qi, 1]
        qz = queries[qi, 2]
        best_d2 = float("inf")
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
                    near, far = l, right[node]
                else:
                    near, far = right[node], l
                stack_nodes[top] = far
                stack_bounds[top] = diff * diff
                top += 1
                node = near
                # bound unchanged: near side shares the parent's bound
        out_d2[qi] = best_d2
        out_idx[qi] = best_i
