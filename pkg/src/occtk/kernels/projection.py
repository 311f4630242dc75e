"""Voxel reference points and their projection into camera images."""

from __future__ import annotations

import numpy as np

from occtk.grid.spec import GridSpec, voxel_centers
from occtk.grid.transforms import CameraModel


def project_points(points, camera: CameraModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pinhole projection of ego-frame points; returns ``(u, v, valid)``.

    A point is valid when it lies in front of the camera and lands inside
    the image.  ``u, v`` are NaN for points at or behind the camera plane.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    cam = camera.extrinsic.inverse().apply(pts)
    depth = cam[:, 2]
    front = depth > 0
    safe = np.where(front, depth, np.nan)
    u = camera.fx * cam[:, 0] / safe + camera.cx
    v = camera.fy * cam[:, 1] / safe + camera.cy
    with np.errstate(invalid="ignore"):
        valid = front & (u >= 0) & (u < camera.width) & (v >= 0) & (v < camera.height)
    return u, v, valid


def reference_points(spec: GridSpec, n_ref: int = 4) -> np.ndarray:
    """``n_ref`` points per voxel on its vertical center line, shaped ``dims + (n_ref, 3)``.

    Point j sits at height fraction (j + 0.5) / n_ref of the cell.
    """
    if n_ref < 1:
        raise ValueError("n_ref must be >= 1")
    centers = voxel_centers(spec)
    frac = (np.arange(n_ref) + 0.5) / n_ref - 0.5
    pts = np.repeat(centers[..., None, :], n_ref, axis=-2)
    pts[..., 2] += frac * spec.resolution
    return pts
