"""Ground-truth occupancy generation from lidar sweeps and tracked boxes."""

from occtk.occgen.config import FlowConfig, Frame, GenConfig
from occtk.occgen.pipeline import (
    Accumulation,
    GenerationError,
    GenerationReport,
    accumulate,
    accumulate_background,
    accumulate_foreground,
    annotate_flow,
    boxes_at,
    build_tracks,
    densify_from_unlabeled,
    fill_holes,
    generate_scene,
    key_frame_grid,
    moving_mask,
    place_objects,
    run_generation,
    split_points,
    voxelize_majority,
    world_cloud,
)
from occtk.occgen.visibility import ray_clear, visibility_mask

__all__ = [
    "Accumulation", "FlowConfig", "Frame", "GenConfig", "GenerationError", "GenerationReport",
    "accumulate", "accumulate_background", "accumulate_foreground", "annotate_flow", "boxes_at",
    "build_tracks", "densify_from_unlabeled", "fill_holes", "generate_scene", "key_frame_grid",
    "moving_mask", "place_objects", "ray_clear", "run_generation", "split_points",
    "visibility_mask", "voxelize_majority", "world_cloud",
]
