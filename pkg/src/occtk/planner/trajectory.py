from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_FOOTPRINT = (4.1, 1.8)  # ego length, width in metres


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Timed BEV poses: ``t`` (s, strictly increasing from 0), ``x, y`` (m), ``heading`` (rad), ``speed`` (m/s)."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(getattr(self, k), dtype=float).reshape(-1) for k in ("t", "x", "y", "heading", "speed")]
        n = len(arrs[0])
        if n == 0:
            raise ValueError("trajectory needs at least one sample")
        if any(len(a) != n for a in arrs):
            raise ValueError("trajectory arrays differ in length")
        if not all(np.all(np.isfinite(a)) for a in arrs):
            raise ValueError("trajectory values must be finite")
        if arrs[0][0] != 0 or np.any(np.diff(arrs[0]) <= 0):
            raise ValueError("trajectory times must start at 0 and strictly increase")
        for k, a in zip(("t", "x", "y", "heading", "speed"), arrs):
            object.__setattr__(self, k, a)

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("t", "x", "y", "heading", "speed"))

    @property
    def endpoint(self) -> tuple[float, float]:
        return float(self.x[-1]), float(self.y[-1])

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def position_at(self, times) -> np.ndarray:
        """Linearly interpolated (x, y) at ``times``; raises beyond the last sample."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times > self.t[-1] + 1e-9) or np.any(times < 0):
            raise ValueError(f"times {times.tolist()} outside trajectory span [0, {self.t[-1]:g}]")
        return np.column_stack([np.interp(times, self.t, self.x), np.interp(times, self.t, self.y)])

    def to_dict(self) -> dict:
        return {
            "samples": [
                {"t": float(t), "x": float(x), "y": float(y), "heading": float(h), "speed": float(v)}
                for t, x, y, h, v in zip(self.t, self.x, self.y, self.heading, self.speed)
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> Trajectory:
        s = d["samples"] if isinstance(d, dict) else d
        return cls(*(np.array([p[k] for p in s], float) for k in ("t", "x", "y", "heading", "speed")))

    @classmethod
    def stationary(cls, horizon: float = 3.0, dt: float = 0.5) -> Trajectory:
        t = np.arange(round(horizon / dt) + 1) * dt
        z = np.zeros_like(t)
        return cls(t, z, z, z, z)
