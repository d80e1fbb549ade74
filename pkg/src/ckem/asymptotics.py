"""Power-law fits of a function near an interval endpoint."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .params import Endpoint, is_finite


def approach_points(x0: Endpoint, x1: Endpoint, side: str, decades: float = 3.0,
                    start: float = 1e-3, m: int = 7) -> np.ndarray:
    """Distances (finite end) or magnitudes (infinite end) spanning ``decades``.

    ``side`` is ``"lower"`` or ``"upper"``. Returns the sample abscissae.
    """
    e, other = (x0, x1) if side == "lower" else (x1, x0)
    sgn = 1.0 if side == "lower" else -1.0
    if is_finite(e):
        width = (float(other) - float(e)) if is_finite(other) else sgn * 1.0
        dist = abs(width) * start * np.logspace(0, -decades, m)
        return float(e) + sgn * dist
    scale = max(1.0, abs(float(other))) if is_finite(other) else 1.0
    mags = scale * np.logspace(2, 2 + decades, m)
    return -sgn * mags


def power_exponent(h: Callable[[float], float], x0: Endpoint, x1: Endpoint, side: str,
                   decades: float = 3.0, start: float = 1e-3) -> float:
    """Exponent k with |h| ~ dist^k (finite end) or |h| ~ |x|^k (infinite end).

    Least-squares slope of log|h| against log distance (or log |x|).
    """
    e = x0 if side == "lower" else x1
    xs = approach_points(x0, x1, side, decades, start)
    vals = np.array([abs(h(float(x))) for x in xs])
    if is_finite(e):
        lx = np.log(np.abs(xs - float(e)))
    else:
        lx = np.log(np.abs(xs))
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        return math.nan
    return float(np.polyfit(lx, np.log(vals), 1)[0])
