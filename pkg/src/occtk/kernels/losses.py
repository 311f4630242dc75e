"""Semantic head and flow head losses with analytic gradients."""

from __future__ import annotations

import numpy as np

from occtk.classes import UNKNOWN


def focal_loss(probs, targets, alpha: float = 0.25, gamma: float = 2.0,
               ignore_label: int = UNKNOWN, check_simplex: bool = True):
    """Mean focal loss ``-alpha (1 - p_t)^gamma log p_t`` over non-ignored voxels.

    ``probs`` is (N, C) with column ``c`` the probability of label code ``c``;
    ``targets`` is (N,).  Returns ``(loss, grad)`` with ``grad`` the partial
    derivatives with respect to every entry of ``probs`` (rows treated as
    independent inputs).
    """
    probs = np.asarray(probs, dtype=float)
    targets = np.asarray(targets).astype(np.int64)
    if probs.ndim != 2 or len(probs) != len(targets):
        raise ValueError(f"probs {probs.shape} and targets {targets.shape} do not align")
    keep = targets != ignore_label
    grad = np.zeros_like(probs)
    n = int(keep.sum())
    if n == 0:
        return 0.0, grad
    rows = np.flatnonzero(keep)
    cols = targets[keep]
    if np.any(cols < 0) or np.any(cols >= probs.shape[1]):
        raise ValueError("target label outside probability columns")
    p = probs[rows]
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if check_simplex and np.any(np.abs(p.sum(axis=1) - 1) > 1e-6):
        raise ValueError("probability rows must sum to 1")
    pt = p[np.arange(n), cols]
    if np.any(pt <= 0):
        raise ValueError("zero probability at a target class; clamp before calling")

    one_minus = 1.0 - pt
    log_pt = np.log(pt)
    mod = one_minus**gamma
    loss = float(np.sum(-alpha * mod * log_pt) / n)

    # d/dp [-a (1-p)^g log p] = a g (1-p)^(g-1) log p - a (1-p)^g / p
    if gamma == 0:
        dmod = np.zeros_like(pt)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            dmod = np.where(one_minus > 0, gamma * one_minus ** (gamma - 1), 0.0)
    dpt = alpha * dmod * log_pt - alpha * mod / pt
    grad[rows, cols] = dpt / n
    return loss, grad


def l1_flow_loss(pred_flow, gt_flow, mask):
    """Mean absolute flow error over masked voxels and both components.

    Returns ``(loss, grad)``; the subgradient is 0 where prediction equals
    ground truth, and the loss is 0 for an empty mask.
    """
    pred = np.asarray(pred_flow, dtype=float)
    gt = np.asarray(gt_flow, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != gt.shape or pred.shape[:-1] != mask.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, gt {gt.shape}, mask {mask.shape}")
    grad = np.zeros_like(pred)
    count = int(mask.sum()) * pred.shape[-1]
    if count == 0:
        return 0.0, grad
    diff = pred[mask] - gt[mask]
    loss = float(np.abs(diff).sum() / count)
    grad[mask] = np.sign(diff) / count
    return loss, grad
