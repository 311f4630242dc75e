"""Feature volumes and trilinear sampling.

Continuous positions are (z, y, x) in cell units with integer coordinates at
cell centers.  Sampling clamps to the border cell outside ``[0, dim - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# corner visiting order for every blend: z-major, then y, then x
_CORNERS = tuple((dz, dy, dx) for dz in (0, 1) for dy in (0, 1) for dx in (0, 1))


@dataclass(frozen=True, eq=False)
class FeatureVolume:
    data: np.ndarray  # (Z, H, W, C)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 4:
            raise ValueError(f"feature volume must be (Z, H, W, C), got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("feature volume has non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[:3]

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    @classmethod
    def from_bev(cls, bev: np.ndarray) -> FeatureVolume:
        """Wrap an (H, W, C) map as a single-layer volume."""
        return cls(np.asarray(bev)[None])


def trilinear_sample(vol: FeatureVolume, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError(f"sample position must be a finite 3-vector, got {p!r}")
    return trilinear_sample_many(vol.data, p[None])[0]


def trilinear_sample_many(data: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Sample ``data`` (Z, H, W, C) at (N, 3) positions; returns (N, C)."""
    positions = np.asarray(positions, dtype=float)
    if not np.all(np.isfinite(positions)):
        raise ValueError("non-finite sample position")
    dims = np.asarray(data.shape[:3])
    p = np.clip(positions, 0.0, dims - 1)
    base = np.minimum(np.floor(p).astype(np.int64), np.maximum(dims - 2, 0))
    frac = p - base
    hi = np.minimum(base + 1, dims - 1)
    idx = (base, hi)
    out = np.zeros((len(p), data.shape[3]))
    for dz, dy, dx in _CORNERS:
        w = (
            (frac[:, 0] if dz else 1 - frac[:, 0])
            * (frac[:, 1] if dy else 1 - frac[:, 1])
            * (frac[:, 2] if dx else 1 - frac[:, 2])
        )
        corner = data[idx[dz][:, 0], idx[dy][:, 1], idx[dx][:, 2]]
        out += w[:, None] * corner
    return out
