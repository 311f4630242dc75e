"""Resample a grid from the previous ego frame into the current one."""

from __future__ import annotations

import numpy as np

from occtk.grid.spec import GridSpec, VoxelGrid, points_to_voxels, voxel_centers
from occtk.grid.transforms import Pose
from occtk.kernels.sampling import FeatureVolume, trilinear_sample_many

# slack for sample positions landing a rounding error outside the source volume
_EDGE_EPS = 1e-9


def _source_points(spec: GridSpec, relative_pose: Pose) -> np.ndarray:
    """Previous-frame location of every current voxel center, shaped (X, Y, Z, 3)."""
    centers = voxel_centers(spec)
    return relative_pose.inverse().apply(centers.reshape(-1, 3)).reshape(centers.shape)


def warp_grid(grid, relative_pose: Pose, spec: GridSpec | None = None):
    """Warp a :class:`VoxelGrid` or :class:`FeatureVolume` by ``relative_pose``.

    ``relative_pose`` maps previous-ego coordinates to current-ego coordinates.
    Each output cell samples the input at its inverse-transformed center:
    nearest cell for labels, trilinear for features.  Samples falling outside
    the source come back free / zero.  A feature volume (Z, H, W, C) is placed
    in space with ``spec`` (dims ``(W, H, Z)``); without one, cell (z, y, x)
    is centered at metric (x, y, z) + 0.5.
    """
    if isinstance(grid, VoxelGrid):
        return _warp_labels(grid, relative_pose)
    if isinstance(grid, FeatureVolume):
        return _warp_features(grid, relative_pose, spec)
    raise TypeError(f"cannot warp {type(grid).__name__}")


def _warp_labels(grid: VoxelGrid, relative_pose: Pose) -> VoxelGrid:
    spec = grid.spec
    src = _source_points(spec, relative_pose).reshape(-1, 3)
    idx, valid = points_to_voxels(src, spec)
    ix, iy, iz = idx.T

    labels = np.zeros(spec.size, dtype=np.uint8)
    labels[valid] = grid.labels[ix[valid], iy[valid], iz[valid]]
    changes = {"labels": labels.reshape(spec.dims), "instances": None, "instance_tracks": ()}
    if grid.flow is not None:
        rot2 = relative_pose.matrix[:2, :2].astype(np.float32)
        flow = np.zeros((spec.size, 2), dtype=np.float32)
        flow[valid] = grid.flow[ix[valid], iy[valid], iz[valid]] @ rot2.T
        changes["flow"] = flow.reshape(spec.dims + (2,))
    if grid.visibility is not None:
        vis = np.zeros(spec.size, dtype=bool)
        vis[valid] = grid.visibility[ix[valid], iy[valid], iz[valid]]
        changes["visibility"] = vis.reshape(spec.dims)
    return grid.replace(**changes)


def _warp_features(vol: FeatureVolume, relative_pose: Pose, spec: GridSpec | None) -> FeatureVolume:
    nz, ny, nx = vol.dims
    if spec is None:
        spec = GridSpec((0.0, 0.0, 0.0), 1.0, (nx, ny, nz))
    if spec.dims != (nx, ny, nz):
        raise ValueError(f"spec dims {spec.dims} do not match volume (W, H, Z) = {(nx, ny, nz)}")
    src = _source_points(spec, relative_pose)  # (X, Y, Z, 3) metric
    cell = (src - np.asarray(spec.origin)) / spec.resolution - 0.5  # continuous (x, y, z)
    cell = np.transpose(cell, (2, 1, 0, 3))[..., ::-1].reshape(-1, 3)  # (Z, Y, X) order, (z, y, x)
    limit = np.array([nz, ny, nx]) - 1
    inside = np.all((cell >= -_EDGE_EPS) & (cell <= limit + _EDGE_EPS), axis=1)
    out = np.zeros((len(cell), vol.channels))
    if inside.any():
        out[inside] = trilinear_sample_many(vol.data, cell[inside])
    return FeatureVolume(out.reshape(nz, ny, nx, vol.channels))
