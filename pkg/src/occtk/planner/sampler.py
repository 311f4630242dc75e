"""Random constant-acceleration, constant-curvature motion candidates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from occtk.planner.trajectory import Trajectory


@dataclass(frozen=True)
class SamplerConfig:
    count: int = 64
    horizon: float = 3.0
    dt: float = 0.5
    velocity: tuple[float, float] = (0.0, 12.0)
    acceleration: tuple[float, float] = (-2.0, 2.0)
    curvature: tuple[float, float] = (-0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if not (np.isfinite(self.horizon) and np.isfinite(self.dt)) or self.dt <= 0 or self.horizon <= 0:
            raise ValueError("horizon and dt must be positive and finite")
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"dt {self.dt:g} does not divide horizon {self.horizon:g}")
        for name in ("velocity", "acceleration", "curvature"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ValueError(f"{name} range must be finite with low <= high, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))

    @property
    def times(self) -> np.ndarray:
        return np.arange(round(self.horizon / self.dt) + 1) * self.dt

    def to_dict(self) -> dict:
        return asdict(self)


def arc_trajectory(v0: float, accel: float, kappa: float, times) -> Trajectory:
    """Closed-form arc from the origin heading +x; speed stops at zero instead of reversing."""
    t = np.asarray(times, dtype=float)
    if accel < 0 and v0 > 0:
        t_stop = v0 / -accel
    elif accel < 0 or (accel == 0 and v0 == 0):
        t_stop = 0.0
    else:
        t_stop = np.inf
    tc = np.minimum(t, t_stop)
    speed = np.maximum(v0 + accel * tc, 0.0)
    s = v0 * tc + 0.5 * accel * tc**2
    heading = kappa * s
    # sin(k s)/k and (1 - cos(k s))/k written to stay exact as k -> 0
    x = s * np.sinc(heading / np.pi)
    y = 0.5 * kappa * s**2 * np.sinc(heading / (2 * np.pi)) ** 2
    return Trajectory(t, x, y, heading, speed)


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """Candidates plus the (v0, a, kappa) each was built from."""

    trajectories: tuple[Trajectory, ...]
    params: np.ndarray

    def __len__(self) -> int:
        return len(self.trajectories)

    def __getitem__(self, i) -> Trajectory:
        return self.trajectories[i]

    def __iter__(self):
        return iter(self.trajectories)

    @classmethod
    def from_params(cls, params, times) -> TrajectorySet:
        params = np.asarray(params, dtype=float).reshape(-1, 3)
        return cls(tuple(arc_trajectory(v, a, k, times) for v, a, k in params), params)


def sample_trajectories(cfg: SamplerConfig | None = None) -> TrajectorySet:
    """``cfg.count`` candidates with (v0, a, kappa) drawn uniformly; fixed seed gives fixed output."""
    cfg = cfg or SamplerConfig()
    rng = np.random.default_rng(cfg.seed)
    params = np.column_stack([
        rng.uniform(*cfg.velocity, cfg.count),
        rng.uniform(*cfg.acceleration, cfg.count),
        rng.uniform(*cfg.curvature, cfg.count),
    ])
    return TrajectorySet.from_params(params, cfg.times)
