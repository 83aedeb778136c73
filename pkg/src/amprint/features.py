"""Per-vertex predictor features.

Ten features per vertex, in column order::

    x, y, z, kg, km, amax, amin, amean, nz, dbb

kg/km are the discrete Gaussian and mean curvature (angle deficit and
cotangent Laplacian over the mixed area), amax/amin/amean the extrema and
mean of incident triangle angles, nz the angle between the vertex normal and
the +z build direction, dbb the distance to the nearest bounding-box face.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .mesh import TriangleMesh, bounding_box

log = logging.getLogger(__name__)

FEATURE_NAMES = ("x", "y", "z", "kg", "km", "amax", "amin", "amean", "nz", "dbb")

# Sliver triangles can blow curvature up; values are clamped here and logged.
CURVATURE_CLAMP = 1e6


@dataclass(frozen=True)
class FeatureRow:
    x: float
    y: float
    z: float
    kg: float
    km: float
    amax: float
    amin: float
    amean: float
    nz: float
    dbb: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES])


class _VertexGeometry:
    """Shared per-vertex accumulators: angles, mixed areas, Laplacian vectors."""

    def __init__(self, mesh: TriangleMesh):
        v, t = mesh.vertices, mesh.triangles
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

        # corner angles: angle at corner k of each triangle
        angles = np.empty((len(t), 3))
        for k, (a, b, c) in enumerate([(p0, p1, p2), (p1, p2, p0), (p2, p0, p1)]):
            u, w = b - a, c - a
            cosang = np.einsum("ij,ij->i", u, w) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
            )
            angles[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))

        areas = mesh.triangle_areas()
        with np.errstate(divide="ignore", over="ignore"):
            cot = 1.0 / np.tan(angles)

        # Meyer mixed area: Voronoi for non-obtuse triangles, else T/2 at the
        # obtuse corner and T/4 at the other two.
        sq = np.stack(
            [
                np.einsum("ij,ij->i", p2 - p1, p2 - p1),
                np.einsum("ij,ij->i", p0 - p2, p0 - p2),
                np.einsum("ij,ij->i", p1 - p0, p1 - p0),
            ],
            axis=1,
        )  # squared length of the edge opposite each corner
        obtuse = angles > np.pi / 2.0
        any_obtuse = obtuse.any(axis=1)
        mixed = np.empty((len(t), 3))
        for k in range(3):
            j, l = (k + 1) % 3, (k + 2) % 3
            voronoi = (sq[:, j] * cot[:, j] + sq[:, l] * cot[:, l]) / 8.0
            mixed[:, k] = np.where(
                any_obtuse,
                np.where(obtuse[:, k], areas / 2.0, areas / 4.0),
                voronoi,
            )

        n_v = mesh.num_vertices
        self.angle_sum = np.zeros(n_v)
        self.mixed_area = np.zeros(n_v)
        self.incidence = np.zeros(n_v, dtype=np.int64)
        flat = t.ravel()
        np.add.at(self.angle_sum, flat, angles.ravel())
        np.add.at(self.mixed_area, flat, mixed.ravel())
        np.add.at(self.incidence, flat, 1)

        # cotangent Laplacian vector: sum_j (cot a_ij + cot b_ij) (x_i - x_j),
        # accumulated per half-edge (the corner angle opposite each edge).
        self.lap = np.zeros((n_v, 3))
        for k in range(3):
            j, l = (k + 1) % 3, (k + 2) % 3
            w = cot[:, k][:, None]  # angle at corner k is opposite edge (j, l)
            d = v[t[:, j]] - v[t[:, l]]
            np.add.at(self.lap, t[:, j], w * d)
            np.add.at(self.lap, t[:, l], -w * d)

        self.angle_min = np.full(n_v, np.inf)
        self.angle_max = np.full(n_v, -np.inf)
        np.minimum.at(self.angle_min, flat, angles.ravel())
        np.maximum.at(self.angle_max, flat, angles.ravel())

        self.boundary = mesh.boundary_vertex_mask()


def _geometry(mesh: TriangleMesh) -> _VertexGeometry:
    geo = getattr(mesh, "_feature_geometry", None)
    if geo is None:
        geo = _VertexGeometry(mesh)
        object.__setattr__(mesh, "_feature_geometry", geo)
    return geo


def gaussian_curvature(mesh: TriangleMesh, vertex: int | None = None):
    """Angle-deficit Gaussian curvature in 1/mm^2.

    Interior vertices use (2*pi - sum of incident angles) / mixed area;
    boundary vertices use pi instead of 2*pi. Scalar for a single vertex,
    the full per-vertex array when ``vertex`` is None.
    """
    geo = _geometry(mesh)
    if vertex is not None and geo.incidence[vertex] == 0:
        raise MeshError(f"vertex {vertex} has no incident triangles")
    full = np.where(geo.boundary, np.pi, 2.0 * np.pi) - geo.angle_sum
    with np.errstate(divide="ignore", invalid="ignore"):
        kg = full / geo.mixed_area
    kg = _clamp_signed(kg, "gaussian")
    return float(kg[vertex]) if vertex is not None else kg


def angle_deficits(mesh: TriangleMesh) -> np.ndarray:
    """Raw angle deficits (before area division); sums to 2*pi*chi when closed."""
    geo = _geometry(mesh)
    return np.where(geo.boundary, np.pi, 2.0 * np.pi) - geo.angle_sum


def mean_curvature(mesh: TriangleMesh, vertex: int | None = None):
    """Cotangent-Laplacian mean curvature magnitude in 1/mm.

    ||sum_j (cot a + cot b)(x_i - x_j)|| / (4 * mixed area); non-negative.
    On boundary vertices one cotangent per boundary edge is missing.
    """
    geo = _geometry(mesh)
    if vertex is not None and geo.incidence[vertex] == 0:
        raise MeshError(f"vertex {vertex} has no incident triangles")
    with np.errstate(divide="ignore", invalid="ignore"):
        km = np.linalg.norm(geo.lap, axis=1) / (4.0 * geo.mixed_area)
    km = _clamp_signed(km, "mean")
    return float(km[vertex]) if vertex is not None else km


def _clamp_signed(values, which):
    bad = ~np.isfinite(values) | (np.abs(values) > CURVATURE_CLAMP)
    if bad.any():
        log.warning("clamped %d %s-curvature value(s) to +-%.0e",
                    int(bad.sum()), which, CURVATURE_CLAMP)
        values = np.clip(np.nan_to_num(values, nan=0.0,
                                       posinf=CURVATURE_CLAMP,
                                       neginf=-CURVATURE_CLAMP),
                         -CURVATURE_CLAMP, CURVATURE_CLAMP)
    return values


def extract_features(mesh: TriangleMesh) -> np.ndarray:
    """The (V, 10) feature matrix, rows ordered by vertex index."""
    geo = _geometry(mesh)
    v = mesh.vertices
    kg = gaussian_curvature(mesh)
    km = mean_curvature(mesh)
    amean = geo.angle_sum / np.maximum(geo.incidence, 1)
    nz = np.arccos(np.clip(mesh.vertex_normals[:, 2], -1.0, 1.0))

    box = bounding_box(mesh)
    slabs = np.hstack([v - box.min, box.max - v])
    dbb = slabs.min(axis=1)

    return np.column_stack([v[:, 0], v[:, 1], v[:, 2], kg, km,
                            geo.angle_max, geo.angle_min, amean, nz, dbb])


def feature_rows(mesh: TriangleMesh) -> list[FeatureRow]:
    return [FeatureRow(*row) for row in extract_features(mesh)]


def boundary_flags(mesh: TriangleMesh) -> np.ndarray:
    """True where curvature used the boundary (pi) formula."""
    return _geometry(mesh).boundary.copy()


def write_features_csv(path, features: np.ndarray, targets: np.ndarray | None = None):
    """CSV export, 9 significant digits; optional trailing target column."""
    header = ",".join(FEATURE_NAMES)
    cols = features
    if targets is not None:
        header += ",target"
        cols = np.column_stack([features, targets])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in cols:
            fh.write(",".join(f"{x:.9g}" for x in row) + "\n")


def read_features_csv(path):
    """Read a feature CSV; returns (features, targets-or-None)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    expected = list(FEATURE_NAMES)
    if header[: len(expected)] != expected:
        raise MeshError(f"{path}: unexpected feature CSV header {header!r}")
    if "target" in header:
        ti = header.index("target")
        return data[:, : len(expected)], data[:, ti]
    return data[:, : len(expected)], None
