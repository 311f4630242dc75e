"""Frames and knobs for ground-truth generation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from occtk.classes import ROAD_CLASSES
from occtk.grid.spec import GridSpec
from occtk.grid.transforms import Box3D, CameraModel, Pose, PointCloud


@dataclass(frozen=True)
class FlowConfig:
    velocity_threshold: float = 0.2  # m/s; at or above counts as moving

    def __post_init__(self):
        if not self.velocity_threshold >= 0:
            raise ValueError("velocity_threshold must be >= 0")


@dataclass(frozen=True)
class GenConfig:
    grid: GridSpec = field(default_factory=GridSpec.benchmark)
    flow: FlowConfig = field(default_factory=FlowConfig)
    densify_neighborhood: int = 1
    densify_min_neighbors: int = 1
    min_points_per_voxel: int = 1
    hole_fill_classes: frozenset = ROAD_CLASSES
    hole_fill_min_neighbors: int = 5
    visibility: bool = True

    def __post_init__(self):
        if self.densify_neighborhood < 1:
            raise ValueError("densify_neighborhood must be >= 1")
        if self.min_points_per_voxel < 1:
            raise ValueError("min_points_per_voxel must be >= 1")
        if not 1 <= self.hole_fill_min_neighbors <= 8:
            raise ValueError("hole_fill_min_neighbors must be in 1..8")
        if self.densify_min_neighbors < 1:
            raise ValueError("densify_min_neighbors must be >= 1")
        object.__setattr__(self, "hole_fill_classes", frozenset(int(c) for c in self.hole_fill_classes))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"origin": list(self.grid.origin), "resolution": self.grid.resolution,
                     "dims": list(self.grid.dims)}
        d["hole_fill_classes"] = sorted(self.hole_fill_classes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GenConfig:
        d = dict(d)
        if "grid" in d and isinstance(d["grid"], dict):
            g = d["grid"]
            d["grid"] = GridSpec(tuple(g["origin"]), float(g["resolution"]), tuple(g["dims"]))
        if "flow" in d and isinstance(d["flow"], dict):
            d["flow"] = FlowConfig(**d["flow"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown generation options {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class Frame:
    """One lidar sweep with its poses.

    ``point_cloud`` is in the sensor frame, ``sensor_pose`` maps sensor to
    ego and ``ego_pose`` ego to world.  ``boxes`` are world-frame
    annotations and are only meaningful on key frames.
    """

    point_cloud: PointCloud
    ego_pose: Pose = field(default_factory=Pose)
    sensor_pose: Pose = field(default_factory=Pose)
    boxes: tuple = ()
    is_key_frame: bool = False
    cameras: tuple = ()
    timestamp: int = 0
    points_path: str | None = None
    labels_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "cameras", tuple(self.cameras))
        for b in self.boxes:
            if not isinstance(b, Box3D):
                raise TypeError("boxes must be Box3D instances")
        for c in self.cameras:
            if not isinstance(c, CameraModel):
                raise TypeError("cameras must be CameraModel instances")

    @property
    def sensor_to_world(self) -> Pose:
        return self.ego_pose @ self.sensor_pose
