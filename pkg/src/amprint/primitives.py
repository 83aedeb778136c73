"""Procedural test solids: box, icosphere, cylinder, L-bracket, flat grid.

All generators return watertight TriangleMesh values (except the open grid)
positioned by an origin offset so they can be dropped onto the print bed.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

_BOX_FACES = [
    # each face as two triangles, outward winding, corner ids of the unit box
    (0, 2, 1), (0, 3, 2),  # z = 0
    (4, 5, 6), (4, 6, 7),  # z = 1
    (0, 1, 5), (0, 5, 4),  # y = 0
    (2, 3, 7), (2, 7, 6),  # y = 1
    (1, 2, 6), (1, 6, 5),  # x = 1
    (0, 4, 7), (0, 7, 3),  # x = 0
]


def box(size=(10.0, 10.0, 10.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    sx, sy, sz = size
    ox, oy, oz = origin
    corners = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=np.float64,
    )
    v = corners * [sx, sy, sz] + [ox, oy, oz]
    return TriangleMesh(v, np.array(_BOX_FACES, dtype=np.int64))


def icosphere(radius=10.0, subdivisions=4, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Icosahedron refined by midpoint subdivision, projected to the sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    return TriangleMesh(v * radius + np.asarray(center, dtype=np.float64), f, weld=False)


def _subdivide(v, f):
    edges = np.sort(
        np.vstack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1
    )
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    mid = (v[uniq[:, 0]] + v[uniq[:, 1]]) / 2.0
    mid_idx = len(v) + np.arange(len(uniq))
    m01 = mid_idx[inv[: len(f)]]
    m12 = mid_idx[inv[len(f): 2 * len(f)]]
    m20 = mid_idx[inv[2 * len(f):]]
    new_f = np.concatenate(
        [
            np.column_stack([f[:, 0], m01, m20]),
            np.column_stack([f[:, 1], m12, m01]),
            np.column_stack([f[:, 2], m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.vstack([v, mid]), new_f


def cylinder(radius=10.0, height=30.0, segments=96, rings=30,
             center_xy=(0.0, 0.0)) -> TriangleMesh:
    """Closed cylinder with axis along z, base on z = 0."""
    cx, cy = center_xy
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    zs = np.linspace(0.0, height, rings + 1)
    side = np.array(
        [[cx + x, cy + y, z] for z in zs for x, y in ring], dtype=np.float64
    )
    verts = [side, np.array([[cx, cy, 0.0], [cx, cy, height]])]
    bot, top = len(side), len(side) + 1
    faces = []
    for r in range(rings):
        base = r * segments
        for s in range(segments):
            a = base + s
            b = base + (s + 1) % segments
            c, d = a + segments, b + segments
            faces += [(a, b, d), (a, d, c)]
    last = rings * segments
    for s in range(segments):
        a, b = s, (s + 1) % segments
        faces.append((bot, b, a))
        faces.append((top, last + a, last + b))
    return TriangleMesh(np.vstack(verts), np.array(faces, dtype=np.int64), weld=False)


def l_bracket(leg=20.0, thickness=8.0, depth=15.0, origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """L-shaped prism: an L cross-section in the xz plane extruded along y.

    The horizontal leg spans x in [0, leg], the vertical leg z in [0, leg],
    both of the given thickness. Watertight, 20 triangles.
    """
    t = thickness
    # L outline in (x, z), counter-clockwise
    outline = np.array(
        [[0, 0], [leg, 0], [leg, t], [t, t], [t, leg], [0, leg]], dtype=np.float64
    )
    n = len(outline)
    ox, oy, oz = origin
    front = np.column_stack([outline[:, 0] + ox, np.full(n, oy), outline[:, 1] + oz])
    back = front + [0.0, depth, 0.0]
    v = np.vstack([front, back])

    # caps: the L fanned from its reflex-visible corner, two triangles each leg
    cap = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5)]
    faces = []
    for a, b, c in cap:
        faces.append((a, b, c))               # front cap, normal -y
        faces.append((a + n, c + n, b + n))   # back cap, normal +y
    for i in range(n):
        j = (i + 1) % n
        faces.append((i, j + n, j))
        faces.append((i, i + n, j + n))
    return TriangleMesh(v, np.array(faces, dtype=np.int64), weld=False)


def flat_grid(size=20.0, divisions=10, z=0.0) -> TriangleMesh:
    """Open flat square grid in the z = const plane (for curvature tests)."""
    xs = np.linspace(0.0, size, divisions + 1)
    v = np.array([[x, y, z] for y in xs for x in xs], dtype=np.float64)
    faces = []
    w = divisions + 1
    for j in range(divisions):
        for i in range(divisions):
            a = j * w + i
            faces += [(a, a + 1, a + w + 1), (a, a + w + 1, a + w)]
    return TriangleMesh(v, np.array(faces, dtype=np.int64), weld=False)
