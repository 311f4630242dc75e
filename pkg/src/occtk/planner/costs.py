"""Safety, comfort and progress costs for a single candidate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from occtk.grid.raster import footprint_overlap
from occtk.grid.spec import BevGrid
from occtk.planner.trajectory import DEFAULT_FOOTPRINT, Trajectory

COST_FORMS = {
    "safety": "sum over samples of occupied cells under the footprint / normalization",
    "comfort": "mean squared longitudinal jerk + mean squared lateral acceleration",
    "progress": "-(final x)",
}


@dataclass(frozen=True)
class CostWeights:
    """Weights for the three costs plus the safety normalization per BEV source.

    A normalization of ``None`` means "use :func:`default_normalization`".
    """

    safety: float = 100.0
    comfort: float = 0.01
    progress: float = 1.0
    normalization: dict = field(default_factory=lambda: {"occupancy": None, "boxes": None})

    def __post_init__(self):
        for name in ("safety", "comfort", "progress"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} weight must be finite and >= 0, got {v}")

    def scaled(self, factor: float) -> CostWeights:
        return CostWeights(self.safety * factor, self.comfort * factor, self.progress * factor,
                           dict(self.normalization))

    def normalization_for(self, bev: BevGrid) -> float:
        value = self.normalization.get(bev.source)
        return default_normalization(bev) if value is None else float(value)


def default_normalization(bev: BevGrid) -> float:
    """Occupied fraction of the map, or 1 for an empty map.

    This is the map's occupied-cell count divided by its cell count, which
    is fixed for a given BEV layout.  So box and occupancy maps of the same
    layout are rescaled relative to each other by their occupied counts.
    """
    n = bev.occupied_count
    return n / bev.cells.size if n else 1.0


def safety_cost(traj: Trajectory, bev: BevGrid, footprint=DEFAULT_FOOTPRINT, normalization: float = 1.0) -> float:
    overlap = footprint_overlap(bev, traj.x, traj.y, traj.heading, footprint[0], footprint[1])
    return float(overlap.sum()) / normalization


def comfort_cost(traj: Trajectory) -> float:
    if len(traj) < 3:
        raise ValueError("comfort cost needs at least 3 samples")
    dt = np.diff(traj.t)
    acc = np.diff(traj.speed) / dt
    jerk = np.diff(acc) / (0.5 * (dt[1:] + dt[:-1]))
    yaw_rate = np.diff(np.unwrap(traj.heading)) / dt
    lateral = 0.5 * (traj.speed[1:] + traj.speed[:-1]) * yaw_rate
    return float(np.mean(jerk**2) + np.mean(lateral**2))


def progress_cost(traj: Trajectory) -> float:
    return -float(traj.x[-1])
