"""Trajectory sampling, cost scoring and command-conditioned selection on BEV maps."""

from occtk.planner.costs import COST_FORMS, CostWeights, comfort_cost, default_normalization, progress_cost, safety_cost
from occtk.planner.sampler import SamplerConfig, TrajectorySet, arc_trajectory, sample_trajectories
from occtk.planner.select import (
    DEFAULT_TURN_THRESHOLD, Command, CostReport, NoFeasibleCandidate, classify_command, plan_from_grid,
    score_candidates, select_trajectory, to_bev,
)
from occtk.planner.trajectory import Trajectory

__all__ = [
    "COST_FORMS", "Command", "CostReport", "CostWeights", "DEFAULT_TURN_THRESHOLD", "NoFeasibleCandidate",
    "SamplerConfig", "Trajectory", "TrajectorySet", "arc_trajectory", "classify_command", "comfort_cost",
    "default_normalization", "plan_from_grid", "progress_cost", "safety_cost", "sample_trajectories",
    "score_candidates", "select_trajectory", "to_bev",
]
