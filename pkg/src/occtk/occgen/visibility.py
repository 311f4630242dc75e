"""Camera visibility by exact cell-by-cell ray traversal."""

from __future__ import annotations

import math
import os
import warnings

import numba
import numpy as np

from occtk.grid.spec import VoxelGrid, voxel_centers
from occtk.grid.transforms import CameraModel, Pose
from occtk.kernels.projection import project_points

# the traversal may be called from several Python threads at once; only the
# tbb and omp layers tolerate that
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "threadsafe"
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)


@numba.njit(cache=True, nogil=True)
def _walk(occ, g0, target):
    """True when no occupied cell lies on the ray from ``g0`` to ``target``'s center before it.

    ``g0`` is the ray origin in grid units.  Ties between axes step the
    lowest axis first (x, then y, then z).
    """
    nx, ny, nz = occ.shape
    cell = np.empty(3, np.int64)
    step = np.empty(3, np.int64)
    tmax = np.empty(3)
    tdelta = np.empty(3)
    for a in range(3):
        g1 = target[a] + 0.5
        d = g1 - g0[a]
        c = math.floor(g0[a])
        cell[a] = c
        if d > 0:
            step[a] = 1
            tmax[a] = (c + 1 - g0[a]) / d
            tdelta[a] = 1.0 / d
        elif d < 0:
            step[a] = -1
            tmax[a] = (c - g0[a]) / d
            tdelta[a] = -1.0 / d
        else:
            step[a] = 0
            tmax[a] = np.inf
            tdelta[a] = np.inf
    limit = 3 + abs(target[0] - cell[0]) + abs(target[1] - cell[1]) + abs(target[2] - cell[2])
    for _ in range(limit):
        if cell[0] == target[0] and cell[1] == target[1] and cell[2] == target[2]:
            return True
        x, y, z = cell[0], cell[1], cell[2]
        if 0 <= x < nx and 0 <= y < ny and 0 <= z < nz and occ[x, y, z]:
            return False
        a = 0
        if tmax[1] < tmax[a]:
            a = 1
        if tmax[2] < tmax[a]:
            a = 2
        cell[a] += step[a]
        tmax[a] += tdelta[a]
    # rounding walked past the target without entering it; count it as reached
    return True


@numba.njit(cache=True, parallel=True)
def _trace(occ, g0, targets):
    out = np.zeros(len(targets), np.bool_)
    for i in numba.prange(len(targets)):
        out[i] = _walk(occ, g0, targets[i])
    return out


def ray_clear(occupied: np.ndarray, origin_cells, targets) -> np.ndarray:
    """Per target voxel, whether the straight ray from ``origin_cells`` reaches it unobstructed.

    ``origin_cells`` is the ray start in continuous grid coordinates
    (``(p - origin) / resolution``); the target voxel itself may be occupied.
    """
    occ = np.ascontiguousarray(occupied, dtype=np.bool_)
    g0 = np.asarray(origin_cells, dtype=float).reshape(3)
    tg = np.ascontiguousarray(np.asarray(targets, dtype=np.int64).reshape(-1, 3))
    if len(tg) == 0:
        return np.zeros(0, bool)
    return _trace(occ, g0, tg)


def visibility_mask(grid: VoxelGrid, cameras, grid_from_ego: Pose | None = None) -> VoxelGrid:
    """Mark voxels seen by at least one camera.

    A voxel is visible when its center projects into some camera's image and
    the traversal from that camera's center meets no occupied voxel before
    it.  Cameras are given in the ego frame; ``grid_from_ego`` maps ego to
    grid coordinates (identity when the grid is ego-centred).
    """
    cameras = list(cameras)
    if not cameras:
        raise ValueError("visibility needs at least one camera")
    for cam in cameras:
        if not isinstance(cam, CameraModel):
            raise TypeError("cameras must be CameraModel instances")
    spec = grid.spec
    to_grid = grid_from_ego or Pose()
    to_ego = to_grid.inverse()
    centers = voxel_centers(spec).reshape(-1, 3)
    centers_ego = to_ego.apply(centers)
    flat_idx = np.stack(np.unravel_index(np.arange(spec.size), spec.dims), axis=1)
    occ = grid.occupied
    visible = np.zeros(spec.size, bool)
    for cam in cameras:
        _, _, in_view = project_points(centers_ego, cam)
        todo = np.flatnonzero(in_view & ~visible)
        if len(todo) == 0:
            continue
        g0 = (to_grid.apply(cam.center) - np.asarray(spec.origin)) / spec.resolution
        visible[todo] = ray_clear(occ, g0, flat_idx[todo])
    return grid.replace(visibility=visible.reshape(spec.dims))
