"""3D deformable attention over a feature volume.

For a query at reference position ``p``::

    out = sum_m W_m sum_k A_mk W'_mk V(p + dp_mk)

where ``V(.)`` is a trilinear sample.  Offsets and attention weights are
inputs here; nothing is learned.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from occtk.kernels.sampling import FeatureVolume, trilinear_sample_many

WEIGHT_SUM_TOL = 1e-6
CHUNK = 8192


@dataclass(frozen=True, eq=False)
class DeformableAttention3DParams:
    """Projection matrices plus per-query offsets and weights.

    value_proj:        (M, K, C/M, C)  per head and sampling point
    output_proj:       (M, C, C/M)
    attention_weights: (M, K) shared by all queries, or (N, M, K)
    offsets:           (M, K, 3) or (N, M, K, 3), in cell units, (z, y, x) order
    """

    value_proj: np.ndarray
    output_proj: np.ndarray
    attention_weights: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        for name in ("value_proj", "output_proj", "attention_weights", "offsets"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        m, k, d, c = self.value_proj.shape
        if c % m or d != c // m:
            raise ValueError(f"value_proj shape {self.value_proj.shape}: heads must divide channels")
        if self.output_proj.shape != (m, c, d):
            raise ValueError(f"output_proj shape {self.output_proj.shape} != {(m, c, d)}")
        if self.attention_weights.shape[-2:] != (m, k):
            raise ValueError(f"attention_weights shape {self.attention_weights.shape} does not end in {(m, k)}")
        if self.offsets.shape[-3:] != (m, k, 3):
            raise ValueError(f"offsets shape {self.offsets.shape} does not end in {(m, k, 3)}")
        sums = self.attention_weights.sum(axis=-1)
        bad = np.argwhere(np.abs(sums - 1.0) > WEIGHT_SUM_TOL)
        if len(bad):
            where = tuple(int(v) for v in bad[0])
            head = where[-1]
            prefix = f"query {where[0]}, " if len(where) > 1 else ""
            raise ValueError(
                f"{prefix}head {head}: attention weights sum to {float(sums[where]):.9g}, expected 1"
            )

    @property
    def heads(self) -> int:
        return self.value_proj.shape[0]

    @property
    def points(self) -> int:
        return self.value_proj.shape[1]

    @property
    def channels(self) -> int:
        return self.value_proj.shape[3]

    @classmethod
    def identity(cls, channels: int, offsets=None, weights=None) -> DeformableAttention3DParams:
        """One head, one point, identity projections."""
        eye = np.eye(channels)
        offsets = np.zeros((1, 1, 3)) if offsets is None else offsets
        weights = np.ones((1, 1)) if weights is None else weights
        k = np.asarray(weights).shape[-1]
        return cls(np.repeat(eye[None, None], k, axis=1), eye[None], weights, offsets)

    @classmethod
    def random(cls, rng, channels: int, heads: int, points: int, n_queries: int | None = None,
               offset_scale: float = 1.5) -> DeformableAttention3DParams:
        d = channels // heads
        lead = () if n_queries is None else (n_queries,)
        logits = rng.normal(size=lead + (heads, points))
        weights = np.exp(logits - logits.max(axis=-1, keepdims=True))
        weights /= weights.sum(axis=-1, keepdims=True)
        return cls(
            rng.normal(size=(heads, points, d, channels)) / np.sqrt(channels),
            rng.normal(size=(heads, channels, d)) / np.sqrt(d),
            weights,
            rng.normal(scale=offset_scale, size=lead + (heads, points, 3)),
        )

    def for_queries(self, index) -> DeformableAttention3DParams:
        """Restrict per-query weights/offsets to ``index`` (no-op for shared ones)."""
        w = self.attention_weights if self.attention_weights.ndim == 2 else self.attention_weights[index]
        o = self.offsets if self.offsets.ndim == 3 else self.offsets[index]
        return DeformableAttention3DParams(self.value_proj, self.output_proj, w, o)


def _attend_chunk(data: np.ndarray, positions: np.ndarray, params: DeformableAttention3DParams,
                  weights: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    n = len(positions)
    m_heads, k_pts, d, c = params.value_proj.shape
    loc = positions[:, None, None, :] + offsets  # (n, M, K, 3)
    sampled = trilinear_sample_many(data, loc.reshape(-1, 3)).reshape(n, m_heads, k_pts, c)

    # value projection, fixed channel order
    values = np.zeros((n, m_heads, k_pts, d))
    for ch in range(c):
        values += params.value_proj[None, :, :, :, ch] * sampled[:, :, :, ch, None]
    heads = np.zeros((n, m_heads, d))
    for k in range(k_pts):
        heads += weights[:, :, k, None] * values[:, :, k]
    out = np.zeros((n, c))
    for m in range(m_heads):
        for j in range(d):
            out += params.output_proj[None, m, :, j] * heads[:, m, j, None]
    return out


def batched_attention(queries, positions, vol: FeatureVolume, params: DeformableAttention3DParams,
                      workers: int = 1) -> np.ndarray:
    """Deformable attention for N queries; output row i belongs to query i.

    Work is split in fixed-size chunks, so results do not depend on ``workers``.
    """
    queries = np.asarray(queries, dtype=float).reshape(-1, vol.channels)
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(queries) != len(positions):
        raise ValueError(f"{len(queries)} queries but {len(positions)} positions")
    if params.channels != vol.channels:
        raise ValueError(f"params expect {params.channels} channels, volume has {vol.channels}")
    n = len(positions)
    m_heads, k_pts = params.heads, params.points
    weights = np.broadcast_to(params.attention_weights, (n, m_heads, k_pts))
    offsets = np.broadcast_to(params.offsets, (n, m_heads, k_pts, 3))
    if params.attention_weights.ndim == 3 and len(params.attention_weights) != n:
        raise ValueError(f"per-query weights for {len(params.attention_weights)} queries, got {n}")
    bad = ~(np.all(np.isfinite(positions), axis=1) & np.all(np.isfinite(offsets), axis=(1, 2, 3)))
    if bad.any():
        raise ValueError(f"query {int(np.argmax(bad))}: non-finite sample position")

    starts = range(0, n, CHUNK)

    def run(s):
        sl = slice(s, s + CHUNK)
        return _attend_chunk(vol.data, positions[sl], params, weights[sl], offsets[sl])

    if workers > 1 and n > CHUNK:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return np.concatenate(parts) if parts else np.zeros((0, vol.channels))


def deformable_attention_3d(query, p, vol: FeatureVolume, params: DeformableAttention3DParams) -> np.ndarray:
    """Single-query form; ``params`` carry (M, K) weights and (M, K, 3) offsets."""
    if params.attention_weights.ndim != 2:
        raise ValueError("single-query attention expects (M, K) weights")
    return batched_attention(np.asarray(query)[None], np.asarray(p)[None], vol, params)[0]
