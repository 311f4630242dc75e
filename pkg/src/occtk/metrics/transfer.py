"""Moving labels between points, voxels and boxes."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from occtk.classes import UNKNOWN
from occtk.grid.spec import GridSpec, VoxelGrid, points_to_voxels
from occtk.grid.transforms import Box3D, PointCloud
from occtk.metrics.occupancy import ConfusionMatrix, confusion_from_labels


def lidar_seg_transfer(points, grid: VoxelGrid) -> np.ndarray:
    """Label each point with its voxel's label; points outside the volume get 255."""
    pts = points.points if isinstance(points, PointCloud) else np.asarray(points, float)
    idx, valid = points_to_voxels(pts, grid.spec)
    out = np.full(len(idx), UNKNOWN, np.uint8)
    out[valid] = grid.labels[tuple(idx[valid].T)]
    return out


def point_confusion(pred_labels, gt_labels) -> ConfusionMatrix:
    """Point-level counts; points with 255 on either side are excluded."""
    pred = np.asarray(pred_labels)
    return confusion_from_labels(pred, gt_labels, valid=pred != UNKNOWN)


def boxes_to_voxels(boxes: Sequence[Box3D], spec: GridSpec) -> VoxelGrid:
    """Voxelize boxes by center containment; a voxel claimed by several boxes
    goes to the one with the nearest center (ties to the earlier box)."""
    labels = np.zeros(spec.dims, np.uint8)
    best = np.full(spec.dims, np.inf)
    origin = np.asarray(spec.origin)
    dims = np.asarray(spec.dims)
    for box in boxes:
        corners = box.from_body(
            np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1], indexing="ij")).reshape(3, -1).T * box.size / 2
        )
        lo = np.clip(np.floor((corners.min(0) - origin) / spec.resolution).astype(int) - 1, 0, dims)
        hi = np.clip(np.ceil((corners.max(0) - origin) / spec.resolution).astype(int) + 1, 0, dims)
        if np.any(hi <= lo):
            continue
        axes = [np.arange(lo[a], hi[a]) for a in range(3)]
        ii = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
        centers = origin + (ii + 0.5) * spec.resolution
        inside = box.contains(centers)
        ii, centers = ii[inside], centers[inside]
        dist = np.sum((centers - box.center) ** 2, axis=1)
        sel = tuple(ii.T)
        take = dist < best[sel]
        labels[tuple(ii[take].T)] = box.label
        best[tuple(ii[take].T)] = dist[take]
    return VoxelGrid(spec, labels)
