"""Semantic and geometric occupancy scores with mergeable confusion counts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from occtk.classes import CLASS_NAMES, FREE, NUM_CLASSES, UNKNOWN
from occtk.grid.spec import VoxelGrid

POLICIES = ("all", "visible_only")
_N = NUM_CLASSES + 1  # index 0 is free


@dataclass(frozen=True, eq=False)
class EvalMask:
    """Which voxels count: every voxel, or only visible ones.

    ``grid`` optionally supplies an explicit boolean mask; otherwise
    ``visible_only`` uses the ground truth's visibility.
    """

    policy: str = "visible_only"
    grid: np.ndarray | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")

    def resolve(self, gt: VoxelGrid) -> np.ndarray:
        if self.policy == "all":
            base = np.ones(gt.spec.dims, bool)
        else:
            vis = self.grid if self.grid is not None else gt.visibility
            if vis is None:
                raise ValueError("visible_only evaluation needs a visibility grid")
            base = np.asarray(vis, bool)
            if base.shape != gt.spec.dims:
                raise ValueError(f"mask shape {base.shape} != grid dims {gt.spec.dims}")
        if self.policy == "all" and self.grid is not None:
            base &= np.asarray(self.grid, bool)
        return base


@dataclass
class ConfusionMatrix:
    """Per-class TP/FP/FN (indexed by label code, 0 unused) plus geometric counts."""

    tp: np.ndarray = field(default_factory=lambda: np.zeros(_N, np.int64))
    fp: np.ndarray = field(default_factory=lambda: np.zeros(_N, np.int64))
    fn: np.ndarray = field(default_factory=lambda: np.zeros(_N, np.int64))
    geo_tp: int = 0
    geo_fp: int = 0
    geo_fn: int = 0
    geo_tn: int = 0
    evaluated: int = 0

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn,
            self.geo_tp + other.geo_tp, self.geo_fp + other.geo_fp,
            self.geo_fn + other.geo_fn, self.geo_tn + other.geo_tn,
            self.evaluated + other.evaluated,
        )

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return (np.array_equal(self.tp, other.tp) and np.array_equal(self.fp, other.fp)
                and np.array_equal(self.fn, other.fn)
                and (self.geo_tp, self.geo_fp, self.geo_fn, self.geo_tn, self.evaluated)
                == (other.geo_tp, other.geo_fp, other.geo_fn, other.geo_tn, other.evaluated))

    @classmethod
    def from_counts(cls, tp=None, fp=None, fn=None, **geo) -> ConfusionMatrix:
        """Build from ``{code: count}`` dicts, handy for fixtures."""
        def arr(d):
            a = np.zeros(_N, np.int64)
            for k, v in (d or {}).items():
                a[int(k)] = v
            return a
        return cls(arr(tp), arr(fp), arr(fn), **geo)

    def class_iou(self) -> np.ndarray:
        """IoU per code 1..16 (index 0 = code 1); NaN where TP + FP + FN = 0."""
        tp, fp, fn = self.tp[1:], self.fp[1:], self.fn[1:]
        denom = tp + fp + fn
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(denom > 0, tp / np.maximum(denom, 1), np.nan)

    def to_dict(self) -> dict:
        iou = self.class_iou()
        value, _ = miou(self)
        return {
            "miou": _json_float(value),
            "iou_geo": _json_float(geo_iou_from(self)),
            "evaluated_voxels": self.evaluated,
            "classes_in_mean": int(np.sum(~np.isnan(iou))),
            "per_class": {
                name: {"iou": _json_float(iou[i]), "tp": int(self.tp[i + 1]), "fp": int(self.fp[i + 1]),
                       "fn": int(self.fn[i + 1])}
                for i, name in enumerate(CLASS_NAMES)
            },
            "geometry": {"tp": self.geo_tp, "fp": self.geo_fp, "fn": self.geo_fn, "tn": self.geo_tn},
        }


def _json_float(v):
    return None if v is None or np.isnan(v) else float(v)


def confusion_from_labels(pred, gt, valid=None) -> ConfusionMatrix:
    """Counts over paired label arrays; entries where ``gt`` is 255 (or ``valid`` is False) are skipped."""
    pred = np.asarray(pred).reshape(-1).astype(np.int64)
    gt = np.asarray(gt).reshape(-1).astype(np.int64)
    if pred.shape != gt.shape:
        raise ValueError(f"label arrays differ: {pred.shape} vs {gt.shape}")
    keep = gt != UNKNOWN
    if valid is not None:
        keep &= np.asarray(valid, bool).reshape(-1)
    p, g = pred[keep], gt[keep]
    agree = p == g
    in_range = lambda a: (a >= 1) & (a <= NUM_CLASSES)
    tp = np.bincount(g[agree & in_range(g)], minlength=_N)[:_N]
    fp = np.bincount(p[~agree & in_range(p)], minlength=_N)[:_N]
    fn = np.bincount(g[~agree & in_range(g)], minlength=_N)[:_N]
    po, go = p != FREE, g != FREE
    return ConfusionMatrix(
        tp.astype(np.int64), fp.astype(np.int64), fn.astype(np.int64),
        int(np.sum(po & go)), int(np.sum(po & ~go)), int(np.sum(~po & go)), int(np.sum(~po & ~go)),
        int(keep.sum()),
    )


def confusion_accumulate(pred: VoxelGrid, gt: VoxelGrid, mask: EvalMask | None = None) -> ConfusionMatrix:
    """Confusion counts over evaluated voxels; ground-truth 255 is skipped.

    ``mask`` defaults to every voxel.
    """
    if pred.spec != gt.spec:
        raise ValueError(f"grid specs differ: {pred.spec} vs {gt.spec}")
    valid = (mask or EvalMask("all")).resolve(gt)
    return confusion_from_labels(pred.labels, gt.labels, valid)


def miou(cm: ConfusionMatrix) -> tuple[float, np.ndarray]:
    """Mean IoU over classes with TP + FP + FN > 0, and the per-class IoUs (NaN when absent).

    The mean is NaN when no class is present at all.
    """
    iou = cm.class_iou()
    present = ~np.isnan(iou)
    return (float(iou[present].mean()) if present.any() else float("nan")), iou


def miou_subset(cm: ConfusionMatrix, classes) -> float:
    """Mean IoU over the listed codes, skipping those absent from both prediction and truth."""
    classes = sorted(set(int(c) for c in classes))
    if not classes:
        raise ValueError("classes must not be empty")
    iou = cm.class_iou()[np.asarray(classes) - 1]
    present = ~np.isnan(iou)
    return float(iou[present].mean()) if present.any() else float("nan")


def geo_iou_from(cm: ConfusionMatrix) -> float:
    union = cm.geo_tp + cm.geo_fp + cm.geo_fn
    return 1.0 if union == 0 else cm.geo_tp / union


def iou_geo(pred: VoxelGrid, gt: VoxelGrid, mask: EvalMask | None = None) -> float:
    """Class-agnostic IoU of occupied voxels; 1.0 when both are empty."""
    return geo_iou_from(confusion_accumulate(pred, gt, mask))
