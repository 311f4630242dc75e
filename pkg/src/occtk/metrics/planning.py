"""Open-loop planning scores: displacement error and footprint collisions."""

from __future__ import annotations

import numpy as np

from occtk.grid.raster import footprint_overlap
from occtk.grid.spec import BevGrid
from occtk.planner.trajectory import DEFAULT_FOOTPRINT, Trajectory

DEFAULT_HORIZONS = (1.0, 2.0, 3.0)


def planning_l2(pred: Trajectory, gt: Trajectory, horizons=DEFAULT_HORIZONS) -> np.ndarray:
    """BEV distance between the two trajectories at each horizon (seconds)."""
    h = np.asarray(horizons, float)
    for traj, name in ((pred, "prediction"), (gt, "ground truth")):
        if np.any(h > traj.duration + 1e-9):
            raise ValueError(f"horizon {h.max():g} s beyond the {name} trajectory ({traj.duration:g} s)")
    d = pred.position_at(h) - gt.position_at(h)
    return np.hypot(d[:, 0], d[:, 1])


def first_collision_time(traj: Trajectory, bev: BevGrid, footprint=DEFAULT_FOOTPRINT) -> float:
    """Time of the first sample whose footprint covers an occupied cell, or inf."""
    hits = footprint_overlap(bev, traj.x, traj.y, traj.heading, footprint[0], footprint[1]) > 0
    return float(traj.t[np.argmax(hits)]) if hits.any() else float("inf")


def collision_rate(trajectories, bev: BevGrid, footprint=DEFAULT_FOOTPRINT, horizons=DEFAULT_HORIZONS) -> np.ndarray:
    """Fraction of trajectories colliding at or before each horizon."""
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    trajectories = list(trajectories)
    h = np.asarray(horizons, float)
    if not trajectories:
        return np.zeros(len(h))
    first = np.array([first_collision_time(t, bev, footprint) for t in trajectories])
    return (first[:, None] <= h[None, :] + 1e-9).mean(axis=0)
