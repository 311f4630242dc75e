"""Cascade height lifting between decoder stages.

Each step maps a (Z_i, H, W, C_i) volume to (Z_{i+1}, H, W, C_{i+1}) by
flattening every (y, x) column to Z_i * C_i features (z-major) and applying
one affine map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from occtk.kernels.sampling import FeatureVolume

DEFAULT_HEIGHTS = (2, 4, 8, 16)
DEFAULT_CHANNELS = (128, 128, 64, 64)


@dataclass(frozen=True, eq=False)
class CascadeSchedule:
    heights: tuple[int, ...] = DEFAULT_HEIGHTS
    channels: tuple[int, ...] = DEFAULT_CHANNELS
    # per step: (weight of shape (Z_i*C_i, Z_{i+1}*C_{i+1}), bias of length Z_{i+1}*C_{i+1})
    lift_weights: tuple = field(default=(), repr=False)

    def __post_init__(self):
        h, c = tuple(self.heights), tuple(self.channels)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "channels", c)
        if len(h) != len(c) or len(h) < 1:
            raise ValueError("heights and channels must have the same non-zero length")
        if any(b <= a for a, b in zip(h, h[1:])):
            raise ValueError(f"heights must be strictly increasing, got {h}")
        for i, (w, b) in enumerate(self.lift_weights):
            want = (h[i] * c[i], h[i + 1] * c[i + 1])
            if np.shape(w) != want or np.shape(b) != (want[1],):
                raise ValueError(f"step {i}: weight {np.shape(w)} / bias {np.shape(b)}, expected {want}")

    @property
    def steps(self) -> int:
        return len(self.heights)

    @classmethod
    def default(cls, seed: int = 0) -> CascadeSchedule:
        """Z = 2, 4, 8, 16 and C = 128, 128, 64, 64 with seeded random weights."""
        return cls.random(DEFAULT_HEIGHTS, DEFAULT_CHANNELS, seed)

    @classmethod
    def random(cls, heights, channels, seed: int = 0) -> CascadeSchedule:
        rng = np.random.default_rng(seed)
        weights = []
        for i in range(len(heights) - 1):
            fan_in = heights[i] * channels[i]
            fan_out = heights[i + 1] * channels[i + 1]
            weights.append((rng.normal(size=(fan_in, fan_out)) / np.sqrt(fan_in), rng.normal(size=fan_out) * 0.01))
        return cls(tuple(heights), tuple(channels), tuple(weights))

    def shape(self, i: int, h: int, w: int) -> tuple[int, int, int, int]:
        return (self.heights[i], h, w, self.channels[i])


def cascade_lift(vol: FeatureVolume, schedule: CascadeSchedule, step: int) -> FeatureVolume:
    """Lift stage ``step`` features to stage ``step + 1``."""
    if not 0 <= step < len(schedule.lift_weights):
        raise ValueError(f"step {step} outside 0..{len(schedule.lift_weights) - 1}")
    z, h, w, c = vol.data.shape
    want = (schedule.heights[step], schedule.channels[step])
    if (z, c) != want:
        raise ValueError(
            f"step {step} expects shape ({want[0]}, H, W, {want[1]}), got {vol.data.shape}"
        )
    weight, bias = schedule.lift_weights[step]
    cols = np.transpose(vol.data, (1, 2, 0, 3)).reshape(h * w, z * c)
    lifted = cols @ np.asarray(weight) + np.asarray(bias)
    z2, c2 = schedule.heights[step + 1], schedule.channels[step + 1]
    return FeatureVolume(np.transpose(lifted.reshape(h, w, z2, c2), (2, 0, 1, 3)))


def run_cascade(bev_volume: FeatureVolume, schedule: CascadeSchedule) -> list[FeatureVolume]:
    """All stage volumes, starting from the first-stage input."""
    out = [bev_volume]
    for i in range(len(schedule.lift_weights)):
        out.append(cascade_lift(out[-1], schedule, i))
    return out
