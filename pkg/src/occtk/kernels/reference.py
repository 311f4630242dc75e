"""Straightforward scalar-loop references used as oracles for the vectorized kernels.

These are deliberately naive: plain Python loops over heads, points, corners
and channels, sharing no code with the fast paths.
"""

from __future__ import annotations

import math

import numpy as np


def naive_trilinear(data: np.ndarray, p) -> np.ndarray:
    nz, ny, nx, nc = data.shape
    dims = (nz, ny, nx)
    q = [min(max(float(p[a]), 0.0), dims[a] - 1.0) for a in range(3)]
    lo = [min(int(math.floor(q[a])), max(dims[a] - 2, 0)) for a in range(3)]
    out = np.zeros(nc)
    for dz in (0, 1):
        for dy in (0, 1):
            for dx in (0, 1):
                w = 1.0
                idx = []
                for a, d in enumerate((dz, dy, dx)):
                    f = q[a] - lo[a]
                    w *= f if d else 1.0 - f
                    idx.append(min(lo[a] + d, dims[a] - 1))
                if w == 0.0:
                    continue
                for c in range(nc):
                    out[c] += w * data[idx[0], idx[1], idx[2], c]
    return out


def naive_attention(p, data: np.ndarray, value_proj, output_proj, weights, offsets) -> np.ndarray:
    m_heads, k_pts, d, c = value_proj.shape
    out = np.zeros(c)
    for m in range(m_heads):
        head = np.zeros(d)
        for k in range(k_pts):
            s = naive_trilinear(data, [p[a] + offsets[m, k, a] for a in range(3)])
            for j in range(d):
                acc = 0.0
                for ch in range(c):
                    acc += value_proj[m, k, j, ch] * s[ch]
                head[j] += weights[m, k] * acc
        for i in range(c):
            for j in range(d):
                out[i] += output_proj[m, i, j] * head[j]
    return out


def naive_cascade_column(column: np.ndarray, weight: np.ndarray, bias: np.ndarray, z2: int, c2: int) -> np.ndarray:
    """Lift one (Z, C) column by explicit matrix-vector product."""
    flat = column.reshape(-1)
    out = np.array([sum(flat[i] * weight[i, j] for i in range(len(flat))) + bias[j] for j in range(weight.shape[1])])
    return out.reshape(z2, c2)
