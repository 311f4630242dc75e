"""Oracle and gradient checks for the decoder kernels, runnable from the CLI."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from occtk.kernels.attention import DeformableAttention3DParams, deformable_attention_3d
from occtk.kernels.cascade import CascadeSchedule, run_cascade
from occtk.kernels.gradcheck import grad_check
from occtk.kernels.losses import focal_loss, l1_flow_loss
from occtk.kernels.reference import naive_attention
from occtk.kernels.sampling import FeatureVolume, trilinear_sample_many


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3g} (tol {self.tolerance:g}, {self.seconds:.2f}s)"


def attention_oracle_error(rng, instances: int = 200) -> float:
    """Worst relative deviation of the vectorized attention from the naive loop."""
    worst = 0.0
    for _ in range(instances):
        m = int(rng.choice([1, 2, 4]))
        k = int(rng.choice([1, 4, 8]))
        c = m * int(rng.integers(1, 16 // m + 1))
        dims = rng.integers(1, 9, size=3)
        vol = FeatureVolume(rng.normal(size=(*dims, c)))
        params = DeformableAttention3DParams.random(rng, c, m, k)
        p = rng.uniform(-0.5, dims - 0.5)
        got = deformable_attention_3d(rng.normal(size=c), p, vol, params)
        want = naive_attention(p, vol.data, params.value_proj, params.output_proj,
                               params.attention_weights, params.offsets)
        err = np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-12)
        worst = max(worst, float(err))
    return worst


def affine_reproduction_error(rng, fields: int = 50, points: int = 1000) -> float:
    worst = 0.0
    for _ in range(fields):
        dims = rng.integers(2, 12, size=3)
        coef = rng.normal(size=(3, 2))
        const = rng.normal(size=2)
        grid = np.stack(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij"), axis=-1).astype(float)
        data = grid @ coef + const
        p = rng.uniform(0, dims - 1, size=(points, 3))
        err = np.max(np.abs(trilinear_sample_many(data, p) - (p @ coef + const)))
        worst = max(worst, float(err))
    return worst


def focal_gradient_error(rng, points: int = 100, step: float = 1e-5) -> float:
    worst = 0.0
    for _ in range(points):
        n, c = 4, 17
        targets = rng.integers(0, c, n)
        probs = rng.uniform(0.2, 1.0, size=(n, c))
        probs /= probs.sum(axis=1, keepdims=True)
        # keep every target probability in the interior
        probs[np.arange(n), targets] = rng.uniform(0.05, 0.95, n)
        alpha, gamma = rng.uniform(0.1, 1.0), rng.uniform(0.0, 3.0)
        f = lambda x: focal_loss(x, targets, alpha, gamma, check_simplex=False)
        worst = max(worst, grad_check(f, probs, step))
    return worst


def l1_gradient_error(rng, points: int = 100, step: float = 1e-5) -> float:
    worst = 0.0
    for _ in range(points):
        shape = (3, 4)
        gt = rng.normal(size=shape + (2,))
        # keep every component at least 1e-3 away from its tie
        diff = rng.uniform(1e-3, 1.0, size=gt.shape) * rng.choice([-1, 1], size=gt.shape)
        mask = rng.random(shape) < 0.7
        f = lambda x: l1_flow_loss(x, gt, mask)
        worst = max(worst, grad_check(f, gt + diff, step))
    return worst


def cascade_shapes_ok(sizes=(4, 200)) -> bool:
    schedule = CascadeSchedule.default()
    for hw in sizes:
        vol = FeatureVolume(np.zeros((2, hw, hw, 128)))
        shapes = [v.data.shape for v in run_cascade(vol, schedule)]
        if shapes != [(2, hw, hw, 128), (4, hw, hw, 128), (8, hw, hw, 64), (16, hw, hw, 64)]:
            return False
    return True


def run_selftest(seed: int = 0, quick: bool = False) -> list[Check]:
    rng = np.random.default_rng(seed)
    scale = 4 if quick else 1
    checks = []

    def timed(name, fn, tol, cmp=lambda v, t: v <= t):
        t0 = time.perf_counter()
        value = fn()
        checks.append(Check(name, bool(cmp(value, tol)), float(value), tol, time.perf_counter() - t0))

    timed("attention vs naive oracle (relative)", lambda: attention_oracle_error(rng, 200 // scale), 1e-6)
    timed("trilinear affine reproduction", lambda: affine_reproduction_error(rng, 50 // scale), 1e-9)
    timed("focal loss gradient (relative)", lambda: focal_gradient_error(rng, 100 // scale), 1e-5)
    timed("l1 flow loss gradient (relative)", lambda: l1_gradient_error(rng, 100 // scale), 1e-5)
    timed("cascade schedule shapes", lambda: float(cascade_shapes_ok((4,) if quick else (4, 200))), 1.0,
          cmp=lambda v, t: v == t)
    return checks
