"""Command filtering, weighted scoring and argmin selection."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from occtk.classes import PLANNING_CLASSES
from occtk.grid.raster import boxes_to_bev, squeeze_to_bev
from occtk.grid.spec import BevGrid, BevSpec, VoxelGrid
from occtk.planner.costs import COST_FORMS, CostWeights, comfort_cost, progress_cost, safety_cost
from occtk.planner.sampler import SamplerConfig, TrajectorySet, sample_trajectories
from occtk.planner.trajectory import DEFAULT_FOOTPRINT, Trajectory

DEFAULT_TURN_THRESHOLD = 2.0  # metres of lateral endpoint offset


class Command(str, Enum):
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"

    @classmethod
    def parse(cls, value) -> Command:
        if isinstance(value, Command):
            return value
        aliases = {"left": cls.TURN_LEFT, "right": cls.TURN_RIGHT}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown command {value!r}; expected forward, left or right") from None


class NoFeasibleCandidate(ValueError):
    pass


def classify_command(traj: Trajectory, threshold: float = DEFAULT_TURN_THRESHOLD) -> Command:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    y = traj.y[-1]
    if y > threshold:
        return Command.TURN_LEFT
    if y < -threshold:
        return Command.TURN_RIGHT
    return Command.FORWARD


@dataclass
class CostReport:
    """Per-candidate cost breakdown and the chosen index."""

    selected: int
    command: Command
    source: str
    normalization: float
    candidates: np.ndarray  # indices that matched the command
    safety: np.ndarray
    comfort: np.ndarray
    progress: np.ndarray
    total: np.ndarray
    weights: CostWeights

    def to_dict(self) -> dict:
        pos = int(np.flatnonzero(self.candidates == self.selected)[0])
        return {
            "selected_index": int(self.selected),
            "command": self.command.value,
            "bev_source": self.source,
            "safety_normalization": self.normalization,
            "weights": {"safety": self.weights.safety, "comfort": self.weights.comfort,
                        "progress": self.weights.progress},
            "cost_forms": COST_FORMS,
            "selected_costs": {"safety": float(self.safety[pos]), "comfort": float(self.comfort[pos]),
                               "progress": float(self.progress[pos]), "total": float(self.total[pos])},
            "candidates_considered": len(self.candidates),
        }


def score_candidates(trajectories: Sequence[Trajectory], bev: BevGrid, weights: CostWeights,
                     footprint=DEFAULT_FOOTPRINT, workers: int | None = None):
    """(safety, comfort, progress, total) arrays in candidate order."""
    norm = weights.normalization_for(bev)

    def one(tr):
        return safety_cost(tr, bev, footprint, norm), comfort_cost(tr), progress_cost(tr)

    if workers and workers > 1 and len(trajectories) > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, trajectories))
    else:
        rows = [one(tr) for tr in trajectories]
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    safety, comfort, progress = arr.T
    total = weights.safety * safety + weights.comfort * comfort + weights.progress * progress
    return safety, comfort, progress, total


def select_trajectory(candidates: TrajectorySet | Sequence[Trajectory], bev: BevGrid, command=Command.FORWARD,
                      weights: CostWeights | None = None, footprint=DEFAULT_FOOTPRINT,
                      threshold: float = DEFAULT_TURN_THRESHOLD, workers: int | None = None):
    """Lowest weighted cost among candidates matching ``command``; ties go to the lower index."""
    weights = weights or CostWeights()
    command = Command.parse(command)
    trajs = list(candidates)
    idx = np.array([i for i, tr in enumerate(trajs) if classify_command(tr, threshold) is command], dtype=np.int64)
    if len(idx) == 0:
        raise NoFeasibleCandidate(f"no candidate matches command {command.value!r}")
    safety, comfort, progress, total = score_candidates([trajs[i] for i in idx], bev, weights, footprint, workers)
    best = int(idx[int(np.argmin(total))])
    report = CostReport(best, command, bev.source, weights.normalization_for(bev), idx,
                        safety, comfort, progress, total, weights)
    return trajs[best], report


def to_bev(source, keep_classes=PLANNING_CLASSES, bev_spec: BevSpec | None = None) -> BevGrid:
    """BEV map from a voxel grid, a ready BEV grid, or a list of boxes (needs ``bev_spec``)."""
    if isinstance(source, BevGrid):
        return source
    if isinstance(source, VoxelGrid):
        return squeeze_to_bev(source, keep_classes)
    if bev_spec is None:
        raise ValueError("rasterizing boxes needs a BEV spec")
    return boxes_to_bev(list(source), bev_spec)


def plan_from_grid(source, command=Command.FORWARD, sampler: SamplerConfig | TrajectorySet | None = None,
                   weights: CostWeights | None = None, keep_classes=PLANNING_CLASSES,
                   bev_spec: BevSpec | None = None, footprint=DEFAULT_FOOTPRINT,
                   threshold: float = DEFAULT_TURN_THRESHOLD, workers: int | None = None):
    """Rasterize, sample and select in one call; returns ``(trajectory, report)``."""
    bev = to_bev(source, keep_classes, bev_spec)
    cands = sampler if isinstance(sampler, TrajectorySet) else sample_trajectories(sampler)
    return select_trajectory(cands, bev, command, weights, footprint, threshold, workers)
