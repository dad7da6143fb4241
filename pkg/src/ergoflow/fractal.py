"""Hawkes gauge, order-two density at 0 and a diagnostic Hausdorff cover estimator."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .estimators import LogAverageResult, log_average_general, log_average_power
from .paths import DomainError, PiecewisePath, power_weighted_integral
from .renewal import counting_path

E_INV = math.exp(-1.0)


def gauge_psi(t, alpha: float, return_flag: bool = False):
    """``psi(t) = t^alpha (log log 1/t)^{1-alpha}``.

    For ``t >= 1/e`` the inner logarithm is not positive and ``t^alpha`` is
    returned instead; ``return_flag=True`` also returns the clamp mask.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("gauge needs t > 0")
    if alpha == 1:
        val, clamped = t.copy(), np.zeros(t.shape, dtype=bool)
    else:
        clamped = t >= E_INV
        inner = np.log(np.log(1.0 / np.where(clamped, 0.5 * E_INV, t)))
        val = np.where(clamped, t ** alpha, t ** alpha * inner ** (1.0 - alpha))
    val = val[()] if val.ndim == 0 else val
    if return_flag:
        return val, (clamped[()] if clamped.ndim == 0 else clamped)
    return val


def gauge_phi(r, a_hat: Callable):
    """Integer-set gauge ``phi(r) = 1/a_hat(1/r)``."""
    r = np.asarray(r, dtype=float)
    return 1.0 / np.asarray(a_hat(1.0 / r), dtype=float)


def order_two_density(zhat, alpha: float, S: float) -> float:
    """``(1/S) int_0^S zhat(e^{-s}) e^{alpha s} ds``.

    For a path this is computed exactly as
    ``(1/S) int_{e^-S}^1 zhat(t) t^{-alpha-1} dt``; the path must be resolved
    down to ``e^-S`` (its first positive knot may not exceed it).  A plain
    callable is integrated by adaptive quadrature in ``s``.
    """
    if S <= 0:
        raise DomainError("S must be positive")
    lo = math.exp(-S)
    if isinstance(zhat, PiecewisePath):
        bp = zhat.breakpoints
        finest = float(bp[1]) if bp[0] <= 0 and bp.size > 1 else float(bp[0])
        if finest > lo or zhat.t_max < 1:
            raise DomainError(f"path resolved only on [{finest}, {zhat.t_max}]; "
                              f"need [{lo}, 1]")
        return power_weighted_integral(zhat, lo, 1.0, -alpha - 1.0) / S
    val, _ = quad(lambda s: zhat(math.exp(-s)) * math.exp(alpha * s), 0.0, S,
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return val / S


def hausdorff_cover_estimate(points, gauge: Callable, delta: float,
                             min_diameter: float = 0.0) -> float:
    """Greedy cover of a sorted finite set by intervals of diameter at most
    ``delta``; returns ``sum gauge(max(diameter, min_diameter))``.

    Diagnostic only: this is an upper-bound flavoured cover value at one
    scale, not a Hausdorff measure.
    """
    x = np.sort(np.asarray(points, dtype=float))
    if x.size == 0:
        return 0.0
    if delta <= 0:
        raise DomainError("delta must be positive")
    starts, ends = [], []
    i, n = 0, x.size
    while i < n:
        j = int(np.searchsorted(x, x[i] + delta, side="right")) - 1
        starts.append(x[i])
        ends.append(x[j])
        i = j + 1
    diam = np.maximum(np.array(ends) - np.array(starts), min_diameter)
    if np.any(diam <= 0):
        raise DomainError("zero-diameter piece; set min_diameter > 0")
    return float(np.sum(gauge(diam)))


def integer_order_two(events, alpha_or_a_hat, T: float) -> LogAverageResult:
    """Log-average density of a renewal time set: ``(1/log T) int_1^T N(t)/a_hat(t) dt/t``."""
    N = counting_path(np.asarray(events, dtype=float), (0.0, float(T)), origin_event=False)
    if callable(alpha_or_a_hat) and not isinstance(alpha_or_a_hat, float):
        return log_average_general(N, alpha_or_a_hat, T)
    return log_average_power(N, float(alpha_or_a_hat), T)
