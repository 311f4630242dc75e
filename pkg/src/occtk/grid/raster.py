"""BEV rasterization of voxel grids, boxes and heading-oriented footprints.

All rectangle tests use cell-center containment with closed edges.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np

from occtk.grid.spec import BevGrid, BevSpec, VoxelGrid
from occtk.grid.transforms import Box3D


def squeeze_to_bev(grid: VoxelGrid, keep_classes: Iterable[int]) -> BevGrid:
    """Collapse the height axis: a column is occupied if any voxel carries a kept class."""
    keep = sorted(set(int(c) for c in keep_classes))
    if not keep:
        raise ValueError("keep_classes must not be empty")
    cells = np.isin(grid.labels, keep).any(axis=2)
    return BevGrid(grid.spec.bev(), cells.astype(np.uint8), source="occupancy")


def _window_offsets(radius_m: float, resolution: float) -> np.ndarray:
    r = int(math.ceil(radius_m / resolution)) + 1
    d = np.arange(-r, r + 1)
    ox, oy = np.meshgrid(d, d, indexing="ij")
    return np.stack([ox.ravel(), oy.ravel()], axis=1)


def rect_cells(spec: BevSpec, cx, cy, heading, length: float, width: float):
    """Cells whose centers fall inside heading-oriented rectangles.

    ``cx, cy, heading`` are arrays of S rectangle poses.  Returns ``(ix, iy,
    inside)`` each shaped (S, K) over a local window of K candidate cells;
    ``inside`` is False for cells outside the map.
    """
    cx = np.atleast_1d(np.asarray(cx, dtype=float))
    cy = np.atleast_1d(np.asarray(cy, dtype=float))
    heading = np.atleast_1d(np.asarray(heading, dtype=float))
    res = spec.resolution
    offsets = _window_offsets(0.5 * math.hypot(length, width), res)
    base_x = np.floor((cx - spec.origin[0]) / res).astype(np.int64)
    base_y = np.floor((cy - spec.origin[1]) / res).astype(np.int64)
    ix = base_x[:, None] + offsets[None, :, 0]
    iy = base_y[:, None] + offsets[None, :, 1]
    px = spec.origin[0] + (ix + 0.5) * res - cx[:, None]
    py = spec.origin[1] + (iy + 0.5) * res - cy[:, None]
    c, s = np.cos(heading)[:, None], np.sin(heading)[:, None]
    lon = c * px + s * py
    lat = -s * px + c * py
    inside = (np.abs(lon) <= length / 2) & (np.abs(lat) <= width / 2)
    inside &= (ix >= 0) & (ix < spec.dims[0]) & (iy >= 0) & (iy < spec.dims[1])
    return ix, iy, inside


def footprint_overlap(bev: BevGrid, x, y, heading, length: float, width: float) -> np.ndarray:
    """Occupied-cell count under the footprint at each of S poses."""
    ix, iy, inside = rect_cells(bev.spec, x, y, heading, length, width)
    ixc = np.clip(ix, 0, bev.spec.dims[0] - 1)
    iyc = np.clip(iy, 0, bev.spec.dims[1] - 1)
    occ = bev.cells[ixc, iyc].astype(bool) & inside
    return occ.sum(axis=1)


def boxes_to_bev(boxes: Sequence[Box3D], spec) -> BevGrid:
    """Rasterize the z-projections of boxes; a cell is set when its center lies inside one.

    ``spec`` may be a :class:`BevSpec` or a 3D grid spec (its BEV plane is used).
    """
    if not isinstance(spec, BevSpec):
        spec = spec.bev()
    cells = np.zeros(spec.dims, dtype=np.uint8)
    for box in boxes:
        ix, iy, inside = rect_cells(spec, box.center[0], box.center[1], box.yaw, box.size[0], box.size[1])
        cells[ix[inside], iy[inside]] = 1
    return BevGrid(spec, cells, source="boxes")
