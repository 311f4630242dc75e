"""Geometric foundation: grid indexing, rigid transforms, boxes, warping and BEV rasters."""

from occtk.grid.raster import boxes_to_bev, footprint_overlap, rect_cells, squeeze_to_bev
from occtk.grid.spec import (
    BevGrid,
    BevSpec,
    GridSpec,
    VoxelGrid,
    points_to_voxels,
    voxel_center,
    voxel_centers,
    world_to_voxel,
)
from occtk.grid.transforms import (
    Box3D,
    CameraModel,
    Pose,
    PointCloud,
    box_at,
    concat_clouds,
    interpolate_box,
    point_in_box,
    transform_box,
    transform_points,
    wrap_angle,
)
from occtk.grid.warp import warp_grid

__all__ = [
    "BevGrid", "BevSpec", "Box3D", "CameraModel", "GridSpec", "Pose", "PointCloud", "VoxelGrid",
    "box_at", "boxes_to_bev", "concat_clouds", "footprint_overlap", "interpolate_box",
    "point_in_box", "points_to_voxels", "rect_cells", "squeeze_to_bev", "transform_box",
    "transform_points", "voxel_center", "voxel_centers", "warp_grid", "world_to_voxel", "wrap_angle",
]
