from __future__ import annotations

import numpy as np

ABS_FLOOR = 1e-8


def grad_check(f, point, step: float = 1e-5, coords=None) -> float:
    """Max relative error between ``f``'s analytic gradient and central differences.

    ``f(x)`` returns ``(value, grad)``.  The relative error at a coordinate is
    ``|num - ana| / max(|num|, |ana|, 1e-8)``.  ``coords`` optionally limits
    the check to a subset of flat indices.
    """
    x = np.array(point, dtype=float)
    _, analytic = f(x)
    analytic = np.asarray(analytic, dtype=float).reshape(-1)
    flat = x.reshape(-1)
    idx = range(flat.size) if coords is None else coords
    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + step
        up = f(x)[0]
        flat[i] = orig - step
        down = f(x)[0]
        flat[i] = orig
        num = (up - down) / (2 * step)
        ana = analytic[i]
        err = abs(num - ana) / max(abs(num), abs(ana), ABS_FLOOR)
        worst = max(worst, err)
    return worst
