"""Yeo-Johnson power transform and maximum-likelihood λ selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

_EPS = np.spacing(1.0)
_INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class YJParams:
    lmbda: float = 1.0
    bounds: tuple[float, float] = (-5.0, 5.0)
    tol: float = 1e-6

    def __post_init__(self):
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError(f"bad λ bounds {self.bounds}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def yeo_johnson(y, lmbda: float):
    """Transform ``y`` (scalar or array) with parameter ``lmbda``.

    Uses ``expm1``/``log1p`` so the λ→0 and λ→2 limits are approached smoothly.
    """
    arr = np.asarray(y, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    yp, yn = arr[pos], arr[~pos]
    if abs(lmbda) < _EPS:
        out[pos] = np.log1p(yp)
    else:
        out[pos] = np.expm1(lmbda * np.log1p(yp)) / lmbda
    if abs(lmbda - 2) < _EPS:
        out[~pos] = -np.log1p(-yn)
    else:
        out[~pos] = -np.expm1((2 - lmbda) * np.log1p(-yn)) / (2 - lmbda)
    return float(out) if out.ndim == 0 else out


def log_likelihood(lmbda: float, data) -> float:
    """Normal-theory profile log-likelihood of the transformed sample."""
    data = np.asarray(data, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        var = np.var(yeo_johnson(data, lmbda))
    if not np.isfinite(var) or var <= 0:
        return -math.inf
    jacobian = np.sum(np.sign(data) * np.log1p(np.abs(data)))
    return -0.5 * data.size * math.log(var) + (lmbda - 1) * jacobian


def _golden_max(f, a: float, b: float, tol: float) -> float:
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (a + b) / 2


def fit_lambda(data: Sequence[float], params: YJParams | None = None, grid_points: int = 201) -> YJParams:
    """Return ``params`` with ``lmbda`` set to the bounded likelihood maximizer.

    A coarse grid locates the best bracket, then golden-section search
    refines it to ``params.tol``.
    """
    params = params or YJParams()
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 3:
        raise ValueError(f"need at least 3 values to fit λ, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data contains non-finite values")
    if np.ptp(x) == 0:
        raise ValueError("degenerate data: all values are equal")

    lo, hi = params.bounds
    grid = np.linspace(lo, hi, grid_points)
    ll = np.array([log_likelihood(g, x) for g in grid])
    if not np.any(np.isfinite(ll)):
        raise ValueError("log-likelihood is not finite anywhere in the λ bounds")
    i = int(np.argmax(ll))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    best = _golden_max(lambda lm: log_likelihood(lm, x), a, b, params.tol)
    if log_likelihood(best, x) < ll[i]:
        best = float(grid[i])
    return replace(params, lmbda=float(min(max(best, lo), hi)))
