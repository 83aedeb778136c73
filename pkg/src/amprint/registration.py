"""Rigid alignment and cloud-to-cloud error measurement.

Point-to-point ICP with a closed-form SVD fit per iteration (rotation +
translation only, never scale or reflection), and exact nearest-neighbor C2C
distances which define the ground-truth dimensional error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import RegistrationError
from .spatial import KDTree

ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.ascontiguousarray(self.rotation, dtype=np.float64)
        t = np.ascontiguousarray(self.translation, dtype=np.float64)
        if r.shape != (3, 3) or t.shape != (3,):
            raise RegistrationError("rigid transform needs a 3x3 rotation and 3-vector")
        if np.abs(r.T @ r - np.eye(3)).max() > ORTHONORMAL_TOL:
            raise RegistrationError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > ORTHONORMAL_TOL:
            raise RegistrationError("rotation has a reflection or scale")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self o other)(x) = self(other(x))."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RigidTransform":
        return cls(np.asarray(d["rotation"]), np.asarray(d["translation"]))

    def save(self, path, **extra):
        with open(path, "w") as fh:
            json.dump({**self.to_dict(), **extra}, fh, indent=2)


@dataclass(frozen=True)
class ErrorStats:
    """Per-point distances with their mean and population standard deviation."""

    distances: np.ndarray
    mae: float
    std: float
    # population std (divide by n); recorded so downstream consumers know
    std_kind: str = "population"

    @classmethod
    def from_distances(cls, distances) -> "ErrorStats":
        d = np.ascontiguousarray(distances, dtype=np.float64)
        if d.ndim != 1 or len(d) == 0:
            raise ValueError("need a non-empty 1-D distance array")
        if np.any(d < 0):
            raise ValueError("distances must be non-negative")
        d.setflags(write=False)
        return cls(d, float(d.mean()), float(d.std(ddof=0)))


def _rigid_fit(source, target):
    """Least-squares rotation + translation mapping source onto target."""
    s_mean = source.mean(axis=0)
    t_mean = target.mean(axis=0)
    h = (source - s_mean).T @ (target - t_mean)
    u, sing, vt = np.linalg.svd(h)
    if sing[1] <= 1e-12 * max(sing[0], 1.0):
        raise RegistrationError("degenerate correspondence covariance (collinear points)")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = t_mean - r @ s_mean
    return RigidTransform(r, t)


def icp_align(source, target, max_iters: int = 50, tol: float = 1e-6,
              trim: float | None = None):
    """Align source points to a target cloud; returns (transform, info).

    Each iteration pairs every (kept) source point with its exact nearest
    target point, then solves the closed-form rigid fit. Stops when the RMS
    correspondence distance changes by less than ``tol`` mm. The returned
    transform is the best iterate by RMS and is never worse than the identity
    start. ``trim``, if given, keeps only that fraction of closest pairs each
    iteration (robustness against partial overlap).
    """
    src = np.ascontiguousarray(source, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 3 or len(src) < 3:
        raise RegistrationError("need at least 3 source points")
    if np.linalg.matrix_rank(src - src.mean(axis=0), tol=1e-9) < 2:
        raise RegistrationError("source points are collinear")
    tgt = np.ascontiguousarray(getattr(target, "points", target), dtype=np.float64)
    if len(tgt) == 0:
        raise RegistrationError("target cloud is empty")
    if trim is not None and not 0.0 < trim <= 1.0:
        raise RegistrationError("trim fraction must be in (0, 1]")

    tree = KDTree(tgt)
    current = RigidTransform.identity()
    moved = src
    dists, idx = tree.query(moved)
    rms = float(np.sqrt(np.mean(dists**2)))
    best_rms, best_transform = rms, current
    history = [rms]

    for _ in range(max_iters):
        if trim is not None:
            keep = np.argsort(dists, kind="stable")[: max(3, int(trim * len(dists)))]
        else:
            keep = slice(None)
        step = _rigid_fit(moved[keep], tgt[idx[keep]])
        current = step.compose(current)
        moved = current.apply(src)
        dists, idx = tree.query(moved)
        new_rms = float(np.sqrt(np.mean(dists**2)))
        history.append(new_rms)
        if new_rms < best_rms:
            best_rms, best_transform = new_rms, current
        if abs(rms - new_rms) < tol:
            rms = new_rms
            break
        rms = new_rms

    info = {"rms": best_rms, "iterations": len(history) - 1, "rms_history": history}
    return best_transform, info


def c2c_distance(source, target) -> ErrorStats:
    """Exact minimal L2 distance from every source point to the target cloud."""
    src = np.ascontiguousarray(getattr(source, "vertices", source), dtype=np.float64)
    tgt = np.ascontiguousarray(getattr(target, "points", target), dtype=np.float64)
    if len(tgt) == 0:
        raise RegistrationError("target cloud is empty")
    tree = KDTree(tgt)
    dists, _ = tree.query(np.atleast_2d(src))
    return ErrorStats.from_distances(dists)
