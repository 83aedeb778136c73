"""Triangle meshes in the printer coordinate frame.

Units are millimeters and +z is the build (slicing) direction. Meshes are
welded and validated on load and immutable afterwards, so they can be shared
freely between threads.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMeshError, MeshError, MeshFormatError

log = logging.getLogger(__name__)

# Triangles thinner than this (mm^2) are dropped during validation.
MIN_TRIANGLE_AREA = 1e-12

# Weld radius as a fraction of the bounding-box diagonal.
WELD_TOLERANCE_FACTOR = 1e-6


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, min <= max componentwise."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        if np.any(self.min > self.max):
            raise MeshError("Aabb min exceeds max")

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max - self.min))

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min


class TriangleMesh:
    """Indexed triangle soup with derived per-vertex normals.

    Construction welds duplicate vertices, drops degenerate triangles and
    unreferenced vertices, and precomputes angle-weighted unit vertex normals.
    Arrays are locked read-only after construction.
    """

    def __init__(self, vertices, triangles, weld=True):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if triangles.size and (triangles.ndim != 2 or triangles.shape[1] != 3):
            raise MeshError("triangles must be an (m, 3) array")
        if len(vertices) == 0:
            raise DegenerateMeshError("mesh has no vertices")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("mesh contains non-finite coordinates")
        triangles = triangles.reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshError("triangle index out of range")

        if weld:
            vertices, triangles = _weld(vertices, triangles)
        vertices, triangles = _validate(vertices, triangles)

        self.vertices = vertices
        self.triangles = triangles
        self.vertex_normals = _angle_weighted_normals(vertices, triangles)
        for a in (self.vertices, self.triangles, self.vertex_normals):
            a.setflags(write=False)

    # -- basic queries -----------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        return _triangle_areas(self.vertices, self.triangles)

    def edges_unique(self) -> np.ndarray:
        """Unique undirected edges as (k, 2) sorted index pairs."""
        e = np.vstack([self.triangles[:, [0, 1]],
                       self.triangles[:, [1, 2]],
                       self.triangles[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self) -> int:
        return self.num_vertices - len(self.edges_unique()) + self.num_triangles

    def boundary_vertex_mask(self) -> np.ndarray:
        """True for vertices on an edge with fewer than two incident triangles."""
        e = np.sort(np.vstack([self.triangles[:, [0, 1]],
                               self.triangles[:, [1, 2]],
                               self.triangles[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        mask = np.zeros(self.num_vertices, dtype=bool)
        boundary_edges = uniq[counts == 1]
        mask[boundary_edges.ravel()] = True
        return mask

    def is_closed(self) -> bool:
        """Watertight test: every edge shared by exactly two triangles."""
        e = np.sort(np.vstack([self.triangles[:, [0, 1]],
                               self.triangles[:, [1, 2]],
                               self.triangles[:, [2, 0]]]), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return bool(np.all(counts == 2))


def surface_area(mesh: TriangleMesh) -> float:
    """Total surface area in mm^2 (sum of triangle areas)."""
    return float(_triangle_areas(mesh.vertices, mesh.triangles).sum())


def bounding_box(mesh: TriangleMesh) -> Aabb:
    """Tight axis-aligned box over all vertices."""
    if mesh.num_vertices == 0:
        raise DegenerateMeshError("empty mesh has no bounding box")
    return Aabb(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def sample_vertices(mesh: TriangleMesh, fraction: float, seed: int) -> np.ndarray:
    """Uniform vertex-index sample without replacement.

    Deterministic for a fixed seed; the sample size is round(fraction * V).
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = mesh.num_vertices
    k = int(round(fraction * n))
    if fraction == 1.0:
        return np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    return np.sort(idx).astype(np.int64)


# -- construction helpers --------------------------------------------------


def _triangle_areas(vertices, triangles):
    p = vertices[triangles]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def _weld(vertices, triangles):
    """Merge vertices closer than 1e-6 x bbox diagonal (grid snap).

    The representative of each weld group is its first occurrence, so welding
    never moves a surviving vertex and is idempotent.
    """
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    diag = float(np.linalg.norm(hi - lo))
    tol = WELD_TOLERANCE_FACTOR * diag
    if tol <= 0.0:
        # all vertices coincide; weld everything to a point
        keys = np.zeros(len(vertices), dtype=np.int64)[:, None]
    else:
        keys = np.round(vertices / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    # keep first-occurrence order so vertex order is stable
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    new_vertices = vertices[np.sort(first)]
    remap = rank[inverse]
    new_triangles = remap[triangles] if triangles.size else triangles
    merged = len(vertices) - len(new_vertices)
    if merged:
        log.debug("welded %d duplicate vertices (tol %.3g mm)", merged, tol)
    return new_vertices, new_triangles.reshape(-1, 3)


def _validate(vertices, triangles):
    """Drop degenerate triangles and unreferenced vertices."""
    if triangles.size:
        distinct = (
            (triangles[:, 0] != triangles[:, 1])
            & (triangles[:, 1] != triangles[:, 2])
            & (triangles[:, 0] != triangles[:, 2])
        )
        areas = _triangle_areas(vertices, triangles)
        keep = distinct & (areas > MIN_TRIANGLE_AREA)
        dropped = int((~keep).sum())
        if dropped:
            log.warning("dropped %d degenerate triangle(s)", dropped)
        triangles = triangles[keep]
    if len(triangles) == 0:
        raise DegenerateMeshError("mesh has no non-degenerate triangles")

    referenced = np.zeros(len(vertices), dtype=bool)
    referenced[triangles.ravel()] = True
    if not referenced.all():
        log.warning("dropped %d unreferenced vertex/vertices", int((~referenced).sum()))
        remap = np.cumsum(referenced) - 1
        vertices = vertices[referenced]
        triangles = remap[triangles]
    return vertices, triangles


def _angle_weighted_normals(vertices, triangles):
    p = vertices[triangles]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    unit = normals / norms

    out = np.zeros_like(vertices)
    for corner in range(3):
        a = p[:, corner]
        b = p[:, (corner + 1) % 3]
        c = p[:, (corner + 2) % 3]
        u = b - a
        v = c - a
        cosang = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        np.add.at(out, triangles[:, corner], unit * ang[:, None])
    lens = np.linalg.norm(out, axis=1, keepdims=True)
    lens[lens == 0.0] = 1.0
    return out / lens


# -- loading ---------------------------------------------------------------

_FORMATS = ("stl", "stl-binary", "stl-ascii", "ply", "obj")


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Load and validate a mesh file.

    ``format`` is one of stl-binary / stl-ascii / ply / obj; ``stl`` (or None
    with a .stl extension) auto-detects the STL flavor.
    """
    path = str(path)
    if format is None:
        ext = path.rsplit(".", 1)[-1].lower() if "." in path else ""
        if ext not in ("stl", "ply", "obj"):
            raise MeshFormatError(f"cannot infer mesh format from {path!r}")
        format = ext
    if format not in _FORMATS:
        raise MeshFormatError(f"unknown mesh format {format!r}")

    if format == "stl":
        format = "stl-binary" if _stl_is_binary(path) else "stl-ascii"
    if format == "stl-binary":
        v, t = _read_stl_binary(path)
    elif format == "stl-ascii":
        v, t = _read_stl_ascii(path)
    elif format == "ply":
        v, t = _read_ply(path)
    else:
        v, t = _read_obj(path)
    return TriangleMesh(v, t)


def _stl_is_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(5)
        fh.seek(0, 2)
        size = fh.tell()
    if size >= 84:
        with open(path, "rb") as fh:
            fh.seek(80)
            (count,) = struct.unpack("<I", fh.read(4))
        if 84 + 50 * count == size:
            return True
    return not head.lower().startswith(b"solid")


def _read_stl_binary(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 84:
        raise MeshFormatError(f"{path}: truncated binary STL")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise MeshFormatError(f"{path}: binary STL shorter than declared facet count")
    rec = np.frombuffer(
        data, dtype=np.dtype([("n", "<3f4"), ("v", "<9f4"), ("attr", "<u2")]),
        count=count, offset=84,
    )
    tri_pts = rec["v"].reshape(-1, 3, 3).astype(np.float64)
    return _soup_to_indexed(tri_pts, path)


def _read_stl_ascii(path):
    coords = []
    with open(path, "r", errors="replace") as fh:
        for line in fh:
            parts = line.split()
            if parts and parts[0].lower() == "vertex":
                if len(parts) != 4:
                    raise MeshFormatError(f"{path}: malformed vertex line {line!r}")
                coords.append([float(x) for x in parts[1:4]])
    if not coords or len(coords) % 3 != 0:
        raise MeshFormatError(f"{path}: ASCII STL vertex count is not a multiple of 3")
    tri_pts = np.asarray(coords, dtype=np.float64).reshape(-1, 3, 3)
    return _soup_to_indexed(tri_pts, path)


def _soup_to_indexed(tri_pts, path):
    if len(tri_pts) == 0:
        raise DegenerateMeshError(f"{path}: STL contains no facets")
    v = tri_pts.reshape(-1, 3)
    t = np.arange(len(v), dtype=np.int64).reshape(-1, 3)
    return v, t


def _read_ply(path):
    with open(path, "rb") as fh:
        header = []
        while True:
            line = fh.readline()
            if not line:
                raise MeshFormatError(f"{path}: unterminated PLY header")
            header.append(line.decode("ascii", errors="replace").strip())
            if header[-1] == "end_header":
                break
        fmt = None
        elements = []  # (name, count, [(proptype, name) or ('list', counttype, itemtype, name)])
        for line in header:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if not elements:
                    raise MeshFormatError(f"{path}: property before element")
                if parts[1] == "list":
                    elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
                else:
                    elements[-1][2].append((parts[1], parts[2]))
        if fmt not in ("ascii", "binary_little_endian"):
            raise MeshFormatError(f"{path}: unsupported PLY format {fmt!r}")
        body = fh.read()

    if fmt == "ascii":
        return _parse_ply_ascii(body, elements, path)
    return _parse_ply_binary(body, elements, path)


_PLY_DTYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _parse_ply_ascii(body, elements, path):
    tokens = body.split()
    pos = 0
    vertices = None
    faces = []
    for name, count, props in elements:
        if name == "vertex":
            width = len(props)
            names = [p[-1] for p in props]
            try:
                xi, yi, zi = names.index("x"), names.index("y"), names.index("z")
            except ValueError:
                raise MeshFormatError(f"{path}: vertex element lacks x/y/z")
            block = tokens[pos:pos + count * width]
            pos += count * width
            arr = np.array(block, dtype=np.float64).reshape(count, width)
            vertices = arr[:, [xi, yi, zi]]
        elif name == "face":
            for _ in range(count):
                n = int(tokens[pos]); pos += 1
                idx = [int(tokens[pos + j]) for j in range(n)]
                pos += n
                for j in range(1, n - 1):
                    faces.append((idx[0], idx[j], idx[j + 1]))
        else:
            # skip unknown fixed-width elements
            width = len(props)
            if any(p[0] == "list" for p in props):
                for _ in range(count):
                    n = int(tokens[pos]); pos += 1 + n
            else:
                pos += count * width
    if vertices is None:
        raise MeshFormatError(f"{path}: PLY has no vertex element")
    tris = np.asarray(faces, dtype=np.int64) if faces else np.empty((0, 3), np.int64)
    return vertices, tris


def _parse_ply_binary(body, elements, path):
    offset = 0
    vertices = None
    faces = []
    for name, count, props in elements:
        if any(p[0] == "list" for p in props):
            if len(props) != 1:
                raise MeshFormatError(f"{path}: mixed list/scalar element unsupported")
            _, counttype, itemtype, _pname = props[0]
            cdt = np.dtype("<" + _PLY_DTYPES[counttype])
            idt = np.dtype("<" + _PLY_DTYPES[itemtype])
            for _ in range(count):
                n = int(np.frombuffer(body, cdt, 1, offset)[0])
                offset += cdt.itemsize
                idx = np.frombuffer(body, idt, n, offset).astype(np.int64)
                offset += idt.itemsize * n
                if name == "face":
                    for j in range(1, n - 1):
                        faces.append((idx[0], idx[j], idx[j + 1]))
        else:
            dt = np.dtype([(p[1], "<" + _PLY_DTYPES[p[0]]) for p in props])
            arr = np.frombuffer(body, dt, count, offset)
            offset += dt.itemsize * count
            if name == "vertex":
                try:
                    vertices = np.column_stack(
                        [arr["x"], arr["y"], arr["z"]]
                    ).astype(np.float64)
                except KeyError:
                    raise MeshFormatError(f"{path}: vertex element lacks x/y/z")
    if vertices is None:
        raise MeshFormatError(f"{path}: PLY has no vertex element")
    tris = np.asarray(faces, dtype=np.int64) if faces else np.empty((0, 3), np.int64)
    return vertices, tris


def _read_obj(path):
    vertices = []
    faces = []
    with open(path, "r", errors="replace") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshFormatError(f"{path}: malformed v record {line!r}")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                for j in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[j], idx[j + 1]))
    if not vertices:
        raise MeshFormatError(f"{path}: OBJ has no vertices")
    return (
        np.asarray(vertices, dtype=np.float64),
        np.asarray(faces, dtype=np.int64) if faces else np.empty((0, 3), np.int64),
    )
