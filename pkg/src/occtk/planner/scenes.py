"""Synthetic BEV scenes for exercising the planner.

The map covers every pose reachable under the default sampler ranges, so
no candidate can escape collision checks by leaving the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from occtk.classes import CONSTRUCTION_VEHICLE, PLANNING_CLASSES
from occtk.grid.raster import boxes_to_bev, rect_cells, squeeze_to_bev
from occtk.grid.spec import BevGrid, BevSpec, GridSpec
from occtk.io.synth import ArmVehicle, shell_occupancy
from occtk.planner.sampler import TrajectorySet
from occtk.planner.select import Command, classify_command
from occtk.planner.trajectory import DEFAULT_FOOTPRINT

PLANNING_BEV = BevSpec((-15.0, -25.0), 0.5, (130, 100))
PLANNING_GRID = GridSpec((-15.0, -25.0, -3.0), 0.5, (130, 100, 16))


def corridor_scene(seed: int, candidates: TrajectorySet, spec: BevSpec = PLANNING_BEV,
                   footprint=DEFAULT_FOOTPRINT, margin: float = 0.5) -> tuple[BevGrid, int]:
    """Fully occupied map with one free corridor: the swept footprint of a forward candidate.

    The corridor follows the straightest forward candidate (smallest final
    lateral offset); ``seed`` widens it by a random fraction of ``margin``.
    Returns the map and the corridor candidate's index.
    """
    rng = np.random.default_rng(seed)
    forward = [i for i, tr in enumerate(candidates) if classify_command(tr) is Command.FORWARD]
    if not forward:
        raise ValueError("candidate set has no forward trajectory to build a corridor from")
    pick = min(forward, key=lambda i: (abs(candidates[i].y[-1]), i))
    tr = candidates[pick]
    pad = margin * rng.uniform(0.0, 1.0)
    cells = np.ones(spec.dims, np.uint8)
    # densify the sweep so consecutive footprints overlap
    n = max(2, int(math.ceil(np.hypot(np.diff(tr.x), np.diff(tr.y)).sum() / (spec.resolution / 2))) + 1)
    s = np.linspace(0, tr.duration, n)
    xs, ys = np.interp(s, tr.t, tr.x), np.interp(s, tr.t, tr.y)
    hs = np.interp(s, tr.t, tr.heading)
    ix, iy, inside = rect_cells(spec, xs, ys, hs, footprint[0] + 2 * pad, footprint[1] + 2 * pad)
    cells[ix[inside], iy[inside]] = 0
    return BevGrid(spec, cells, source="occupancy"), pick


@dataclass
class ProtrusionScene:
    vehicle: ArmVehicle
    truth: BevGrid      # body and arm
    occupancy: BevGrid  # squeezed from a voxel grid of the vehicle surface
    boxes: BevGrid      # body box only, the arm is not annotated


def protrusion_scene(seed: int, grid: GridSpec = PLANNING_GRID) -> ProtrusionScene:
    """A construction vehicle beside the lane with its arm reaching across it."""
    rng = np.random.default_rng(seed)
    side = rng.choice([-1.0, 1.0])
    ahead = rng.uniform(6.0, 16.0)
    body_len = 4.5
    offset = rng.uniform(3.5, 5.0)
    yaw = -side * math.pi / 2 + rng.uniform(-0.2, 0.2)  # facing the lane
    vehicle = ArmVehicle.build((ahead, side * (offset + body_len / 2), -0.2), yaw,
                               arm_length=rng.uniform(3.0, 5.0), arm_section=(0.5, 0.4),
                               label=CONSTRUCTION_VEHICLE)
    bev = grid.bev()
    truth = boxes_to_bev(vehicle.solid_parts(), bev)
    occ = squeeze_to_bev(shell_occupancy(vehicle, grid), PLANNING_CLASSES)
    boxes = boxes_to_bev([vehicle.body], bev)
    return ProtrusionScene(vehicle, truth, occ, boxes)
