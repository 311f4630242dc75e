"""JSON scene manifests: frames, poses, boxes and cameras with point files on disk.

Example document::

    {"version": 1,
     "frames": [{"timestamp": 0, "is_key_frame": true,
                 "points": "sweeps/000.bin", "labels": "sweeps/000.label",
                 "ego_pose": {"translation": [0, 0, 0], "rotation": [1, 0, 0, 0]},
                 "sensor_pose": {...},
                 "boxes": [{"center": [...], "size": [...], "yaw": 0.0,
                            "velocity": [0, 0], "class": "car", "track_id": "a"}],
                 "cameras": [{"name": "front", "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": ..},
                              "extrinsic": {...}, "image_size": [1600, 900]}]}]}

Timestamps are integer microseconds; paths are relative to the manifest.
"""

from __future__ import annotations

import json
from pathlib import Path

from occtk.classes import class_code, class_name
from occtk.grid.transforms import Box3D, CameraModel, Pose, PointCloud
from occtk.io.points import read_points, write_points
from occtk.occgen.config import Frame

MANIFEST_VERSION = 1


class ManifestError(ValueError):
    pass


def _pose(d, where) -> Pose:
    try:
        return Pose(d["translation"], d.get("rotation", [1.0, 0.0, 0.0, 0.0]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: bad pose ({exc})") from None


def _box(d, where, timestamp) -> Box3D:
    try:
        name = d["class"]
    except (KeyError, TypeError):
        raise ManifestError(f"{where}: missing class") from None
    try:
        label = class_code(name)
    except KeyError:
        raise ManifestError(f"{where}: unknown class {name!r}") from None
    try:
        return Box3D(d["center"], d["size"], d.get("yaw", 0.0), d.get("velocity", [0.0, 0.0]),
                     label, str(d["track_id"]), timestamp)
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: bad box ({exc})") from None


def _camera(d, where) -> CameraModel:
    try:
        k = d["intrinsics"]
        w, h = d["image_size"]
        return CameraModel(k["fx"], k["fy"], k["cx"], k["cy"], _pose(d["extrinsic"], where), int(w), int(h),
                           d.get("name", ""))
    except ManifestError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{where}: bad camera ({exc})") from None


def parse_manifest(doc: dict, base: Path | None = None, load_points: bool = True) -> list[Frame]:
    """Frames from a decoded manifest; points are loaded relative to ``base``."""
    if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
        raise ManifestError("manifest must be an object with a 'frames' list")
    if doc.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {doc.get('version')}")
    base = Path(base) if base is not None else Path(".")
    frames = []
    prev = None
    for i, fd in enumerate(doc["frames"]):
        where = f"frames[{i}]"
        if not isinstance(fd, dict):
            raise ManifestError(f"{where}: not an object")
        try:
            t = int(fd["timestamp"])
        except (KeyError, TypeError, ValueError):
            raise ManifestError(f"{where}: missing or bad timestamp") from None
        if prev is not None and t <= prev:
            raise ManifestError(f"{where}: timestamp {t} not after previous {prev}")
        prev = t
        key = bool(fd.get("is_key_frame", False))
        boxes = [_box(b, f"{where}.boxes[{j}]", t) for j, b in enumerate(fd.get("boxes", []))]
        cams = [_camera(c, f"{where}.cameras[{j}]") for j, c in enumerate(fd.get("cameras", []))]
        pts_path = fd.get("points")
        lab_path = fd.get("labels")
        if load_points and pts_path is not None:
            cloud = read_points(base / pts_path, base / lab_path if lab_path else None, timestamp=t)
        else:
            cloud = PointCloud.empty("sensor", labeled=False)
        frames.append(Frame(
            cloud,
            _pose(fd.get("ego_pose", {"translation": [0, 0, 0]}), f"{where}.ego_pose"),
            _pose(fd.get("sensor_pose", {"translation": [0, 0, 0]}), f"{where}.sensor_pose"),
            boxes, key, cams, t, pts_path, lab_path,
        ))
    return frames


def read_manifest(path, load_points: bool = True) -> list[Frame]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    try:
        return parse_manifest(doc, path.parent, load_points)
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from None


def frame_to_dict(frame: Frame) -> dict:
    boxes = []
    for b in frame.boxes:
        d = b.to_dict()
        d["class"] = class_name(b.label)
        boxes.append(d)
    return {
        "timestamp": frame.timestamp,
        "is_key_frame": frame.is_key_frame,
        "points": frame.points_path,
        "labels": frame.labels_path,
        "ego_pose": frame.ego_pose.to_dict(),
        "sensor_pose": frame.sensor_pose.to_dict(),
        "boxes": boxes,
        "cameras": [c.to_dict() for c in frame.cameras],
    }


def manifest_dict(frames) -> dict:
    return {"version": MANIFEST_VERSION, "frames": [frame_to_dict(f) for f in frames]}


def write_manifest(path, frames, write_clouds: bool = True) -> None:
    """Write the manifest and, when ``write_clouds``, each frame's points next to it.

    Frames without a ``points_path`` get ``sweeps/NNNNNN.bin`` (plus a
    ``.label`` sidecar when the cloud is labelled).
    """
    path = Path(path)
    frames = list(frames)
    out = []
    for i, f in enumerate(frames):
        pts, lab = f.points_path, f.labels_path
        if write_clouds:
            if pts is None:
                pts = f"sweeps/{i:06d}.bin"
                lab = f"sweeps/{i:06d}.label" if f.point_cloud.labels is not None else None
            (path.parent / pts).parent.mkdir(parents=True, exist_ok=True)
            write_points(path.parent / pts, f.point_cloud, path.parent / lab if lab else None)
        out.append(Frame(f.point_cloud, f.ego_pose, f.sensor_pose, f.boxes, f.is_key_frame, f.cameras,
                         f.timestamp, pts, lab))
    path.write_text(json.dumps(manifest_dict(out), indent=1))
