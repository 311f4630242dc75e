"""Raw point sweeps: little-endian f32 (x, y, z, intensity) records plus an optional u8 label sidecar."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from occtk.grid.transforms import PointCloud

RECORD = np.dtype("<f4")
RECORD_BYTES = 16


class PointsFormatError(ValueError):
    pass


def decode_points(data: bytes) -> np.ndarray:
    """(N, 4) float32 array from raw bytes."""
    if len(data) % RECORD_BYTES:
        offset = len(data) // RECORD_BYTES * RECORD_BYTES
        raise PointsFormatError(f"truncated record at byte offset {offset} ({len(data)} bytes total)")
    return np.frombuffer(data, RECORD).reshape(-1, 4)


def read_points(path, labels_path=None, frame: str = "sensor", timestamp: int = 0) -> PointCloud:
    try:
        raw = decode_points(Path(path).read_bytes())
    except PointsFormatError as exc:
        raise PointsFormatError(f"{path}: {exc}") from None
    labels = None
    if labels_path is not None:
        labels = np.frombuffer(Path(labels_path).read_bytes(), np.uint8)
        if len(labels) != len(raw):
            raise PointsFormatError(f"{labels_path}: {len(labels)} labels for {len(raw)} points")
    return PointCloud(raw[:, :3].astype(float), labels, timestamp, frame, raw[:, 3])


def encode_points(cloud: PointCloud) -> bytes:
    raw = np.zeros((len(cloud), 4), RECORD)
    raw[:, :3] = cloud.points
    if cloud.intensity is not None:
        raw[:, 3] = cloud.intensity
    return raw.tobytes()


def write_points(path, cloud: PointCloud, labels_path=None) -> None:
    Path(path).write_bytes(encode_points(cloud))
    if labels_path is not None:
        if cloud.labels is None:
            raise ValueError("cloud has no labels to write")
        Path(labels_path).write_bytes(cloud.labels.astype(np.uint8).tobytes())
