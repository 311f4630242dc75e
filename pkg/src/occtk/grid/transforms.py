"""Rigid transforms, point clouds, oriented boxes and pinhole cameras."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.transform import Rotation


def wrap_angle(a):
    """Wrap angles into (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform ``x -> R x + t`` with a unit quaternion in (w, x, y, z) order."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    timestamp: int = 0

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(3)
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError(f"quaternion {q.tolist()} is not unit length")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "timestamp", int(self.timestamp))

    @classmethod
    def identity(cls, timestamp: int = 0) -> Pose:
        return cls(timestamp=timestamp)

    @classmethod
    def from_yaw(cls, yaw: float, translation=(0.0, 0.0, 0.0), timestamp: int = 0) -> Pose:
        q = np.array([math.cos(yaw / 2), 0.0, 0.0, math.sin(yaw / 2)])
        return cls(np.asarray(translation, dtype=float), q, timestamp)

    @classmethod
    def from_matrix(cls, rotation: np.ndarray, translation=(0.0, 0.0, 0.0), timestamp: int = 0) -> Pose:
        x, y, z, w = Rotation.from_matrix(rotation).as_quat()
        return cls(np.asarray(translation, dtype=float), np.array([w, x, y, z]), timestamp)

    @property
    def _rot(self) -> Rotation:
        w, x, y, z = self.rotation
        return Rotation.from_quat([x, y, z, w])

    @property
    def matrix(self) -> np.ndarray:
        return self._rot.as_matrix()

    @property
    def yaw(self) -> float:
        r = self.matrix
        return math.atan2(r[1, 0], r[0, 0])

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.matrix.T + self.translation

    def inverse(self) -> Pose:
        r_inv = self.matrix.T
        w, x, y, z = self.rotation
        return Pose(-r_inv @ self.translation, np.array([w, -x, -y, -z]), self.timestamp)

    def compose(self, other: Pose) -> Pose:
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        rot = self._rot * other._rot
        x, y, z, w = rot.as_quat()
        t = self.matrix @ other.translation + self.translation
        return Pose(t, np.array([w, x, y, z]), self.timestamp)

    def __matmul__(self, other: Pose) -> Pose:
        return self.compose(other)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (
            np.array_equal(self.translation, other.translation)
            and np.array_equal(self.rotation, other.rotation)
            and self.timestamp == other.timestamp
        )

    def to_dict(self) -> dict:
        return {"translation": self.translation.tolist(), "rotation": self.rotation.tolist()}


FRAMES = ("sensor", "ego", "world", "object")


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    labels: np.ndarray | None = None
    timestamp: int = 0
    frame: str = "sensor"
    intensity: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.uint8).reshape(-1)
            if len(labels) != len(pts):
                raise ValueError(f"{len(labels)} labels for {len(pts)} points")
            object.__setattr__(self, "labels", labels)
        if self.intensity is not None:
            inten = np.asarray(self.intensity, dtype=np.float32).reshape(-1)
            if len(inten) != len(pts):
                raise ValueError(f"{len(inten)} intensities for {len(pts)} points")
            object.__setattr__(self, "intensity", inten)
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls, frame: str = "world", labeled: bool = True) -> PointCloud:
        return cls(np.zeros((0, 3)), np.zeros(0, np.uint8) if labeled else None, frame=frame)

    def subset(self, mask) -> PointCloud:
        return replace(
            self,
            points=self.points[mask],
            labels=None if self.labels is None else self.labels[mask],
            intensity=None if self.intensity is None else self.intensity[mask],
        )

    def with_labels(self, labels) -> PointCloud:
        return replace(self, labels=labels)


def transform_points(pc: PointCloud, pose: Pose, frame: str | None = None) -> PointCloud:
    """Map every point by ``pose``; labels and intensity ride along unchanged."""
    return replace(pc, points=pose.apply(pc.points), frame=frame or pc.frame)


def concat_clouds(clouds, frame: str = "world") -> PointCloud:
    clouds = [c for c in clouds if len(c)]
    if not clouds:
        return PointCloud.empty(frame)
    labels = [
        c.labels if c.labels is not None else np.full(len(c), 255, np.uint8) for c in clouds
    ]
    return PointCloud(
        np.concatenate([c.points for c in clouds]),
        np.concatenate(labels),
        timestamp=clouds[0].timestamp,
        frame=frame,
    )


@dataclass(frozen=True, eq=False)
class Box3D:
    """Oriented box; ``size`` holds full extents (length, width, height) along the body axes.

    Body x points along the heading ``yaw`` (radians about world z).  ``label``
    is the class code.
    """

    center: np.ndarray
    size: np.ndarray
    yaw: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    label: int = 0
    track_id: str = ""
    timestamp: int = 0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        s = np.asarray(self.size, dtype=float).reshape(3)
        v = np.asarray(self.velocity, dtype=float).reshape(2)
        if np.any(s <= 0):
            raise ValueError(f"box size must be positive, got {s.tolist()}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "size", s)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "track_id", str(self.track_id))
        object.__setattr__(self, "timestamp", int(self.timestamp))

    @property
    def pose(self) -> Pose:
        """Body-to-parent transform of the box."""
        return Pose.from_yaw(self.yaw, self.center, self.timestamp)

    def to_body(self, points: np.ndarray) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        d = np.asarray(points, dtype=float) - self.center
        return np.stack([c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1], d[..., 2]], axis=-1)

    def from_body(self, points: np.ndarray) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        p = np.asarray(points, dtype=float)
        out = np.stack([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1], p[..., 2]], axis=-1)
        return out + self.center

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = self.to_body(points)
        return np.all(np.abs(local) <= self.size / 2, axis=-1)

    def corners_2d(self) -> np.ndarray:
        """BEV footprint corners, counter-clockwise."""
        hl, hw = self.size[0] / 2, self.size[1] / 2
        local = np.array([[hl, hw, 0], [-hl, hw, 0], [-hl, -hw, 0], [hl, -hw, 0]])
        return self.from_body(local)[:, :2]

    def replace(self, **changes) -> Box3D:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "size": self.size.tolist(),
            "yaw": self.yaw,
            "velocity": self.velocity.tolist(),
            "track_id": self.track_id,
        }


def point_in_box(p, box: Box3D) -> bool:
    return bool(box.contains(np.asarray(p, dtype=float)))


def transform_box(box: Box3D, pose: Pose) -> Box3D:
    """Express ``box`` in another frame; the pose is assumed to rotate about z only."""
    rot = pose.matrix
    return box.replace(
        center=pose.apply(box.center),
        yaw=box.yaw + pose.yaw,
        velocity=rot[:2, :2] @ box.velocity,
    )


def interpolate_box(a: Box3D, b: Box3D, t: float, velocity: str = "lerp") -> Box3D:
    """Box between two key-frame annotations of one track at fraction ``t``.

    Center, size, timestamp and (by default) velocity are interpolated
    linearly.  Yaw follows the shorter arc at a constant rate, so a box
    turning through the +-pi seam never spins the long way round.
    ``velocity="displacement"`` replaces the velocity with the key-frame
    displacement over the key-frame interval instead.
    """
    if a.track_id != b.track_id:
        raise ValueError(f"cannot interpolate track {a.track_id!r} with {b.track_id!r}")
    if not a.timestamp < b.timestamp:
        raise ValueError("key frames must be strictly time-ordered")
    if t == 0:
        return a
    if t == 1:
        return b
    dyaw = wrap_angle(b.yaw - a.yaw)
    if velocity == "lerp":
        vel = (1 - t) * a.velocity + t * b.velocity
    elif velocity == "displacement":
        dt = (b.timestamp - a.timestamp) * 1e-6
        vel = (b.center[:2] - a.center[:2]) / dt
    else:
        raise ValueError(f"unknown velocity mode {velocity!r}")
    return a.replace(
        center=(1 - t) * a.center + t * b.center,
        size=(1 - t) * a.size + t * b.size,
        yaw=a.yaw + t * dyaw,
        velocity=vel,
        timestamp=int(round((1 - t) * a.timestamp + t * b.timestamp)),
    )


def box_at(keys: list[Box3D], timestamp: int, velocity: str = "lerp") -> Box3D | None:
    """Track box at ``timestamp`` from time-sorted key boxes; None outside the key span."""
    if not keys or timestamp < keys[0].timestamp or timestamp > keys[-1].timestamp:
        return None
    for a, b in zip(keys, keys[1:]):
        if a.timestamp <= timestamp <= b.timestamp:
            if timestamp == a.timestamp:
                return a
            if timestamp == b.timestamp:
                return b
            t = (timestamp - a.timestamp) / (b.timestamp - a.timestamp)
            return interpolate_box(a, b, t, velocity)
    return keys[0]


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera; ``extrinsic`` maps camera coordinates (z forward, x right, y down) to ego."""

    fx: float
    fy: float
    cx: float
    cy: float
    extrinsic: Pose = field(default_factory=Pose)
    width: int = 1600
    height: int = 900
    name: str = ""

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("image size must be positive")

    @property
    def center(self) -> np.ndarray:
        return self.extrinsic.translation

    @classmethod
    def looking(cls, yaw: float, position=(0.0, 0.0, 0.0), fov_deg: float = 70.0,
                width: int = 1600, height: int = 900, name: str = "") -> CameraModel:
        """Level camera facing ``yaw`` in the ego frame with a horizontal field of view."""
        f = (width / 2) / math.tan(math.radians(fov_deg) / 2)
        fwd = np.array([math.cos(yaw), math.sin(yaw), 0.0])
        right = np.array([math.sin(yaw), -math.cos(yaw), 0.0])
        down = np.array([0.0, 0.0, -1.0])
        rot = np.stack([right, down, fwd], axis=1)
        return cls(f, f, width / 2, height / 2, Pose.from_matrix(rot, position), width, height, name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "intrinsics": {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy},
            "extrinsic": self.extrinsic.to_dict(),
            "image_size": [self.width, self.height],
        }
