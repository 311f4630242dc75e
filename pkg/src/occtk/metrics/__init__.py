"""Occupancy, point-segmentation and planning metrics."""

from occtk.metrics.occupancy import (
    ConfusionMatrix,
    EvalMask,
    confusion_accumulate,
    confusion_from_labels,
    geo_iou_from,
    iou_geo,
    miou,
    miou_subset,
)
from occtk.metrics.planning import (
    DEFAULT_FOOTPRINT,
    DEFAULT_HORIZONS,
    collision_rate,
    first_collision_time,
    planning_l2,
)
from occtk.metrics.transfer import boxes_to_voxels, lidar_seg_transfer, point_confusion

__all__ = [
    "ConfusionMatrix", "DEFAULT_FOOTPRINT", "DEFAULT_HORIZONS", "EvalMask", "boxes_to_voxels",
    "collision_rate", "confusion_accumulate", "confusion_from_labels", "first_collision_time",
    "geo_iou_from", "iou_geo", "lidar_seg_transfer", "miou", "miou_subset", "planning_l2",
    "point_confusion",
]
