"""Grid specifications and dense voxel / BEV containers.

Voxel ``i`` along an axis covers the half-open interval
``[origin + i * res, origin + (i + 1) * res)``; a point on the upper face of
the volume is out of volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from occtk.classes import FREE, NUM_CLASSES, UNKNOWN


@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float, float] = (-50.0, -50.0, -5.0)
    resolution: float = 0.5
    dims: tuple[int, int, int] = (200, 200, 16)

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        object.__setattr__(self, "resolution", float(self.resolution))
        if len(self.origin) != 3 or len(self.dims) != 3:
            raise ValueError("origin and dims must have three components")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if min(self.dims) < 1:
            raise ValueError(f"dims must be >= 1, got {self.dims}")

    @classmethod
    def benchmark(cls) -> GridSpec:
        """The 200 x 200 x 16 volume at 0.5 m over [-50, 50]^2 x [-5, 3]."""
        return cls()

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(self.dims) * self.resolution

    def bev(self) -> BevSpec:
        return BevSpec(self.origin[:2], self.resolution, self.dims[:2])

    def with_resolution(self, resolution: float) -> GridSpec:
        """Same metric volume at another resolution (extent must divide evenly)."""
        extent = np.asarray(self.dims) * self.resolution
        dims = np.round(extent / resolution).astype(int)
        if not np.allclose(dims * resolution, extent):
            raise ValueError(f"extent {extent} is not a multiple of {resolution}")
        return GridSpec(self.origin, resolution, tuple(dims))


@dataclass(frozen=True)
class BevSpec:
    origin: tuple[float, float] = (-50.0, -50.0)
    resolution: float = 0.5
    dims: tuple[int, int] = (200, 200)

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        object.__setattr__(self, "resolution", float(self.resolution))
        if not self.resolution > 0 or min(self.dims) < 1:
            raise ValueError("invalid BEV spec")

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid of cell-center coordinates, each shaped ``dims``."""
        xs = self.origin[0] + (np.arange(self.dims[0]) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.dims[1]) + 0.5) * self.resolution
        return np.meshgrid(xs, ys, indexing="ij")


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Dense semantic grid indexed ``labels[x, y, z]``.

    ``flow`` holds a BEV-plane velocity per voxel (shape ``dims + (2,)``) and
    ``visibility`` a boolean mask; both are optional.  ``instances`` is an
    internal sidecar written by object placement: the index into
    ``instance_tracks`` of the track that produced each voxel, or -1.
    """

    spec: GridSpec
    labels: np.ndarray
    flow: np.ndarray | None = None
    visibility: np.ndarray | None = None
    instances: np.ndarray | None = field(default=None, repr=False)
    instance_tracks: tuple = field(default=(), repr=False)

    def __post_init__(self):
        dims = self.spec.dims
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.shape != dims:
            raise ValueError(f"labels shape {labels.shape} != dims {dims}")
        object.__setattr__(self, "labels", labels)
        if self.flow is not None:
            flow = np.asarray(self.flow, dtype=np.float32)
            if flow.shape != dims + (2,):
                raise ValueError(f"flow shape {flow.shape} != {dims + (2,)}")
            object.__setattr__(self, "flow", flow)
        if self.visibility is not None:
            vis = np.asarray(self.visibility, dtype=bool)
            if vis.shape != dims:
                raise ValueError(f"visibility shape {vis.shape} != dims {dims}")
            object.__setattr__(self, "visibility", vis)

    @classmethod
    def empty(cls, spec: GridSpec) -> VoxelGrid:
        return cls(spec, np.zeros(spec.dims, dtype=np.uint8))

    @property
    def occupied(self) -> np.ndarray:
        return self.labels != FREE

    def replace(self, **changes) -> VoxelGrid:
        return replace(self, **changes)

    def validate(self) -> None:
        bad = (self.labels > NUM_CLASSES) & (self.labels != UNKNOWN)
        if bad.any():
            raise ValueError(f"invalid label codes {np.unique(self.labels[bad]).tolist()}")
        if self.flow is not None and np.any(self.flow[~self.occupied] != 0):
            raise ValueError("non-zero flow on free voxels")

    def __eq__(self, other):
        if not isinstance(other, VoxelGrid) or self.spec != other.spec:
            return NotImplemented
        return (
            np.array_equal(self.labels, other.labels)
            and _opt_equal(self.flow, other.flow)
            and _opt_equal(self.visibility, other.visibility)
        )


@dataclass(frozen=True, eq=False)
class BevGrid:
    """Binary BEV map indexed ``cells[x, y]``; 1 marks an occupied cell."""

    spec: BevSpec
    cells: np.ndarray
    source: str = "occupancy"

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.shape != self.spec.dims:
            raise ValueError(f"cells shape {cells.shape} != dims {self.spec.dims}")
        if not np.isin(cells, (0, 1)).all():
            raise ValueError("BEV cells must be 0 or 1")
        object.__setattr__(self, "cells", cells.astype(np.uint8))

    @property
    def occupied_count(self) -> int:
        return int(self.cells.sum())

    def __eq__(self, other):
        if not isinstance(other, BevGrid):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.cells, other.cells)


def _opt_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


def world_to_voxel(p, spec: GridSpec) -> tuple[int, int, int] | None:
    """Voxel index containing ``p``, or ``None`` when ``p`` is out of volume."""
    idx, valid = points_to_voxels(np.asarray(p, dtype=float).reshape(1, 3), spec)
    if not valid[0]:
        return None
    return tuple(int(v) for v in idx[0])


def points_to_voxels(points: np.ndarray, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`world_to_voxel`: returns (N, 3) int indices and a validity mask."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    rel = (points - np.asarray(spec.origin)) / spec.resolution
    with np.errstate(invalid="ignore"):
        idx = np.floor(rel)
    valid = np.all(np.isfinite(idx), axis=1)
    valid &= np.all(idx >= 0, axis=1) & np.all(idx < np.asarray(spec.dims), axis=1)
    idx = np.where(valid[:, None], idx, 0).astype(np.int64)
    return idx, valid


def voxel_center(idx, spec: GridSpec) -> np.ndarray:
    idx = np.asarray(idx)
    if idx.shape != (3,) or np.any(idx < 0) or np.any(idx >= np.asarray(spec.dims)):
        raise IndexError(f"voxel index {idx.tolist()} outside dims {spec.dims}")
    return np.asarray(spec.origin) + (idx + 0.5) * spec.resolution


def voxel_centers(spec: GridSpec) -> np.ndarray:
    """All voxel centers, shaped ``dims + (3,)``."""
    axes = [
        spec.origin[k] + (np.arange(spec.dims[k]) + 0.5) * spec.resolution for k in range(3)
    ]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
