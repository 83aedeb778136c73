"""Synthetic layer generation and point-cloud reconstruction.

slice_mesh rasterizes every layer's cross-section into a binary image
(even-odd fill of the exact plane/mesh intersection). reconstruct walks the
layer boundaries twice: once per layer in the bed plane, and once per
xz cross-section sweeping along y so faces parallel to the bed are sampled
too. Pixel (i, j) of layer k maps to the physical point
((i+0.5)*pitch, (j+0.5)*pitch, (k+0.5)*thickness).

This is a desk-scale stand-in for camera-based layer capture; outputs carry a
"synthetic" source tag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud
from .errors import MeshNotClosedError, SliceError
from .mesh import TriangleMesh, bounding_box, surface_area

DEFAULT_BED = (254.0, 203.0)          # mm, printer bed x/y
DEFAULT_PITCH = 254.0 / 3840.0        # mm per pixel, 4K-wide raster
DEFAULT_THICKNESS = 0.102             # mm per layer

# nudges coordinates lying exactly on a slicing/scan line
TIE_EPS = 1e-9


@dataclass
class LayerStack:
    """Binary rasters of consecutive layers on a common pixel grid.

    rasters[k, j, i] covers global pixel column ix0+i, row iy0+j of the bed
    lattice; the raster window is the mesh footprint, not the whole bed.
    """

    rasters: np.ndarray            # (layers, ny, nx) bool
    pitch: float
    thickness: float
    bed: tuple[float, float] = DEFAULT_BED
    z0: float = 0.0
    ix0: int = 0
    iy0: int = 0
    source_area: float | None = None
    source: str = "synthetic"

    def __post_init__(self):
        if self.pitch <= 0 or self.thickness <= 0:
            raise ValueError("pitch and thickness must be positive")
        if self.rasters.ndim != 3:
            raise ValueError("rasters must be a (layers, ny, nx) array")
        nx, ny = self.rasters.shape[2], self.rasters.shape[1]
        if nx * self.pitch > self.bed[0] + self.pitch or ny * self.pitch > self.bed[1] + self.pitch:
            raise ValueError("raster exceeds the print bed")

    @property
    def num_layers(self) -> int:
        return len(self.rasters)

    def layer_z(self, k: int) -> float:
        return self.z0 + (k + 0.5) * self.thickness


def slice_mesh(mesh: TriangleMesh, pitch: float = DEFAULT_PITCH,
               thickness: float = DEFAULT_THICKNESS,
               bed: tuple[float, float] = DEFAULT_BED) -> LayerStack:
    """Rasterize mid-plane cross-sections of a watertight mesh.

    Layers cover [0, ceil(zmax/thickness)*thickness); a final layer whose
    mid-plane clears the mesh yields an all-black raster.
    """
    if pitch <= 0 or thickness <= 0:
        raise ValueError("pitch and thickness must be positive")
    if not mesh.is_closed():
        raise MeshNotClosedError(
            "mesh is not watertight; layer cross-sections would be open"
        )
    box = bounding_box(mesh)
    if box.min[0] < -pitch or box.min[1] < -pitch or box.min[2] < -thickness:
        raise ValueError("mesh extends below/behind the bed origin")
    if box.max[0] > bed[0] + pitch or box.max[1] > bed[1] + pitch:
        raise ValueError(f"mesh exceeds the {bed[0]:g} x {bed[1]:g} mm bed")

    ix0 = max(0, int(math.floor(box.min[0] / pitch)))
    iy0 = max(0, int(math.floor(box.min[1] / pitch)))
    ix1 = int(math.ceil(box.max[0] / pitch))
    iy1 = int(math.ceil(box.max[1] / pitch))
    nx, ny = max(1, ix1 - ix0), max(1, iy1 - iy0)
    n_layers = max(1, int(math.ceil(box.max[2] / thickness)))

    tri = mesh.vertices[mesh.triangles]  # (m, 3, 3)
    zmin = tri[:, :, 2].min(axis=1)
    zmax = tri[:, :, 2].max(axis=1)

    rasters = np.zeros((n_layers, ny, nx), dtype=bool)
    row_centers = (iy0 + np.arange(ny) + 0.5) * pitch
    col_centers = (ix0 + np.arange(nx) + 0.5) * pitch
    for k in range(n_layers):
        zc = (k + 0.5) * thickness
        hits = (zmin <= zc) & (zmax >= zc)
        if not hits.any():
            continue
        segs = _cross_section(tri[hits], zc)
        if len(segs) == 0:
            continue
        rasters[k] = _fill_even_odd(segs, row_centers, col_centers, k)

    return LayerStack(rasters, pitch, thickness, bed=bed, z0=0.0,
                      ix0=ix0, iy0=iy0, source_area=surface_area(mesh))


def _cross_section(tri, zc):
    """Intersection segments of triangles with the plane z = zc, as (n,2,2) xy."""
    z = tri[:, :, 2].copy()
    z[z == zc] += TIE_EPS  # tie-break vertices exactly on the plane
    segs = []
    for e0, e1 in ((0, 1), (1, 2), (2, 0)):
        za, zb = z[:, e0], z[:, e1]
        cross = (za < zc) != (zb < zc)
        tpar = (zc - za[cross]) / (zb[cross] - za[cross])
        pt = tri[cross, e0, :2] + tpar[:, None] * (tri[cross, e1, :2] - tri[cross, e0, :2])
        segs.append((np.nonzero(cross)[0], pt))

    counts = np.zeros(len(tri), dtype=np.int64)
    for idx, _ in segs:
        np.add.at(counts, idx, 1)
    # a straddling triangle has exactly two crossing edges
    out = np.full((len(tri), 2, 2), np.nan)
    slot = np.zeros(len(tri), dtype=np.int64)
    for idx, pt in segs:
        for which, p in zip(idx, pt):
            out[which, slot[which]] = p
            slot[which] += 1
    return out[counts == 2]


def _fill_even_odd(segs, row_centers, col_centers, layer_idx):
    """Scanline even-odd fill over pixel centers; exact segment intersections."""
    y0 = segs[:, 0, 1].copy()
    y1 = segs[:, 1, 1].copy()
    x0 = segs[:, 0, 0]
    x1 = segs[:, 1, 0]
    raster = np.zeros((len(row_centers), len(col_centers)), dtype=bool)
    ylo = np.minimum(y0, y1)
    yhi = np.maximum(y0, y1)
    for j, yc in enumerate(row_centers):
        lo = ylo.copy()
        hi = yhi.copy()
        lo[lo == yc] += TIE_EPS
        hi[hi == yc] += TIE_EPS
        live = (lo <= yc) & (yc < hi)
        if not live.any():
            continue
        t = (yc - y0[live]) / (y1[live] - y0[live])
        xs = np.sort(x0[live] + t * (x1[live] - x0[live]))
        if len(xs) % 2:
            raise SliceError(
                f"layer {layer_idx}: open cross-section contour at scanline y={yc:.4f}"
            )
        for a, b in xs.reshape(-1, 2):
            i0, i1 = np.searchsorted(col_centers, (a, b))
            raster[j, i0:i1] = True
    return raster


def boundary_pixels(raster: np.ndarray) -> np.ndarray:
    """Pixel (row, col) coordinates of the 1-px inside boundary.

    A boundary pixel is white with at least one black 4-neighbor; the image
    border counts as black. Rows are returned in row-major order.
    """
    r = np.asarray(raster, dtype=bool)
    if r.ndim != 2:
        raise ValueError("raster must be 2-D")
    padded = np.pad(r, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    mask = r & ~interior
    return np.argwhere(mask)


def reconstruct(stack: LayerStack) -> PointCloud:
    """Assemble the two-pass boundary point cloud from a layer stack.

    Pass 1 walks each layer raster (bed-plane contours); pass 2 walks each
    xz cross-section along y, which is what samples faces parallel to the
    bed. Duplicate lattice sites merge; points are ordered by (layer, row,
    column).
    """
    if stack.num_layers == 0:
        raise ValueError("empty layer stack")
    vol = stack.rasters
    n_layers, ny, nx = vol.shape
    triples = []

    # xy pass: boundaries within each layer
    for k in range(n_layers):
        jy_ix = boundary_pixels(vol[k])
        if len(jy_ix):
            kji = np.column_stack(
                [np.full(len(jy_ix), k, dtype=np.int64), jy_ix]
            )
            triples.append(kji)

    # xz pass: boundaries of each cross-section parallel to the xz plane
    for j in range(ny):
        section = vol[:, j, :]  # rows = layer index k, cols = x index i
        ki = boundary_pixels(section)
        if len(ki):
            kji = np.column_stack(
                [ki[:, 0], np.full(len(ki), j, dtype=np.int64), ki[:, 1]]
            )
            triples.append(kji)

    if not triples:
        raise ValueError("layer stack contains no white pixels")
    kji = np.unique(np.vstack(triples), axis=0)

    pts = np.empty((len(kji), 3))
    pts[:, 0] = (stack.ix0 + kji[:, 2] + 0.5) * stack.pitch
    pts[:, 1] = (stack.iy0 + kji[:, 1] + 0.5) * stack.pitch
    pts[:, 2] = stack.z0 + (kji[:, 0] + 0.5) * stack.thickness

    density = None
    if stack.source_area:
        density = len(pts) / stack.source_area
    return PointCloud(pts, density)


def save_layer_pngs(stack: LayerStack, directory) -> list[str]:
    """Dump every layer as a 1-bit PNG for inspection; returns the paths."""
    from pathlib import Path

    from PIL import Image

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    digits = max(4, len(str(stack.num_layers)))
    for k in range(stack.num_layers):
        img = Image.fromarray(stack.rasters[k][::-1]).convert("1")
        p = directory / f"layer_{k:0{digits}d}.png"
        img.save(p)
        paths.append(str(p))
    return paths
