"""Cocycles over flows: construction, the cocycle law, integrals and
the Birkhoff / Hopf time averages.

Orbits are concrete: a point is a simulated path (or event sequence) together
with a position along the flow, and the flow acts by moving the position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .paths import (DomainError, PiecewisePath, dual_increment_flow, evaluate,
                    generalized_inverse, hahn_decompose, increment_flow)


class NotYetRecurrent(ArithmeticError):
    """Denominator cocycle still zero at the requested time; extend the orbit."""


@dataclass(frozen=True)
class Cocycle:
    """``value(x, t)`` over the flow ``flow(x, s)``."""

    name: str
    value: Callable[[Any, float], float]
    flow: Callable[[Any, float], Any]

    def __call__(self, x, t):
        return self.value(x, t)


# ----------------------------------------------------------------------
# orbit points
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class RenewalOrbit:
    """Point of the renewal suspension flow: sorted event times (one of them
    at 0) and the current position ``u``.  The flow is ``u -> u + s``."""

    events: np.ndarray
    u: float = 0.0

    def shifted(self, s: float) -> "RenewalOrbit":
        return RenewalOrbit(self.events, self.u + s)

    def count(self, x):
        """``N(x)``: events in ``(0, x]``, negative for ``x < 0``."""
        ev = self.events
        return np.searchsorted(ev, x, side="right") - np.searchsorted(ev, 0.0, side="right")

    def _check(self, x):
        if np.any(np.asarray(x) < self.events[0]) or np.any(np.asarray(x) > self.events[-1]):
            raise DomainError("orbit too short for the requested time")

    def return_time(self) -> float:
        ev = self.events
        k = np.searchsorted(ev, self.u, side="right")
        if k >= ev.size:
            raise DomainError("no further event on this orbit")
        return float(ev[k] - self.u)

    @property
    def gap(self) -> float:
        """Length of the gap containing ``u``."""
        k = np.searchsorted(self.events, self.u, side="right")
        return float(self.events[k] - self.events[k - 1])


@dataclass(frozen=True, eq=False)
class PathPoint:
    """The point ``eta_u(path)`` kept lazily as ``(path, u)``."""

    path: PiecewisePath
    u: float = 0.0

    def shifted(self, s: float) -> "PathPoint":
        return PathPoint(self.path, self.u + s)

    def materialize(self) -> PiecewisePath:
        return increment_flow(self.path, self.u)


@dataclass(frozen=True, eq=False)
class WordPoint:
    """Point of a shift space: a finite window of a word and an index."""

    word: np.ndarray
    index: int = 0

    def shifted(self, n: int) -> "WordPoint":
        return WordPoint(self.word, self.index + int(n))


# ----------------------------------------------------------------------
# cocycles
# ----------------------------------------------------------------------
def _renewal_flow(x, s):
    return x.shifted(s)


time_cocycle = Cocycle("time", lambda x, t: float(t), _renewal_flow)


def _counting_value(x: RenewalOrbit, t):
    x._check(x.u + t)
    return float(x.count(x.u + t) - x.count(x.u))


# N_B(x, t): returns to the section {event at the current position} in
# (0, t] for t > 0, minus the returns in (t, 0] for t < 0.
counting_cocycle = Cocycle("counting", _counting_value, _renewal_flow)


def generated_cocycle(primitive: Callable, name: str = "generated") -> Cocycle:
    """Cocycle ``int_0^t phi(tau_s x) ds`` on the renewal suspension flow for
    ``phi(gap, height)``, given through ``primitive(gap, h) = int_0^h phi(gap, v) dv``."""

    def potential(x: RenewalOrbit, y):
        ev = x.events
        gaps = np.diff(ev)
        full = np.concatenate(([0.0], np.cumsum(primitive(gaps, gaps))))
        zero = int(np.searchsorted(ev, 0.0))
        k = np.clip(np.searchsorted(ev, y, side="right") - 1, 0, gaps.size - 1)
        return full[k] - full[zero] + primitive(gaps[k], y - ev[k])

    def value(x: RenewalOrbit, t):
        x._check(x.u + t)
        return float(potential(x, x.u + t) - potential(x, x.u))

    return Cocycle(name, value, _renewal_flow)


def indicator_primitive(lo: float, hi: float) -> Callable:
    """Primitive of ``phi = 1{lo <= height < hi}``."""
    return lambda gap, h: np.clip(h, lo, np.maximum(lo, np.minimum(hi, gap))) - lo


def _coordinate_value(x: PathPoint, t):
    return float(evaluate(x.path, x.u + t) - evaluate(x.path, x.u))


# Psi(f, t) = f(t) over the increment flow; on dual paths under their own
# increment flow this is the cocycle Phi(f^, t) = f^(t).
coordinate_cocycle = Cocycle("coordinate", _coordinate_value, _renewal_flow)


# Over the increment subflow g -> g(. + g^(s)) - s acting on dual paths g = f^.
dual_coordinate_cocycle = Cocycle(
    "dual-coordinate",
    lambda g, t: float(evaluate(generalized_inverse(g), t)),
    dual_increment_flow,
)

phi_tilde_cocycle = Cocycle(
    "phi-tilde",
    lambda g, t: float(evaluate(g, evaluate(generalized_inverse(g), t))),
    dual_increment_flow,
)


def discrete_generated_cocycle(phi: Callable, name: str = "discrete") -> Cocycle:
    """``S_n phi(x)``: sum of ``phi`` over ``x, ..., T^{n-1} x`` for ``n >= 0``
    and minus the sum over ``T^n x, ..., T^{-1} x`` for ``n < 0``."""

    def value(x: WordPoint, n):
        n = int(n)
        i = x.index
        if min(i, i + n) < 0 or max(i, i + n) > x.word.size:
            raise DomainError("word window too short")
        vals = phi(x.word)
        cs = np.concatenate(([0], np.cumsum(vals)))
        return cs[i + n] - cs[i]

    return Cocycle(name, value, lambda x, n: x.shifted(n))


def hahn_split(x: PathPoint) -> tuple[PathPoint, PathPoint]:
    """Split the coordinate cocycle of ``x`` into two nondecreasing cocycles."""
    plus, minus = hahn_decompose(x.path)
    return PathPoint(plus, x.u), PathPoint(minus, x.u)


# ----------------------------------------------------------------------
# checks and integrals
# ----------------------------------------------------------------------
def verify_cocycle_law(phi: Cocycle, points, pairs) -> float:
    """``max |Phi(x, t+s) - Phi(x, s) - Phi(tau_s x, t)|`` over points and pairs."""
    worst = 0.0
    for x in points:
        for s, t in pairs:
            r = phi(x, t + s) - phi(x, s) - phi(phi.flow(x, s), t)
            worst = max(worst, abs(float(r)))
    return worst


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    se: float
    n_samples: int
    divergent: bool = False
    tail_index: float = math.inf


def hill_tail_index(samples, k: int | None = None) -> float:
    """Hill estimate of the tail index of ``|samples|`` from the top ``k``
    order statistics (default ``sqrt(n)``).  Light tails give large values."""
    x = np.sort(np.abs(np.asarray(samples, dtype=float)))[::-1]
    x = x[x > 0]
    if x.size < 16:
        return math.inf
    k = k or int(math.sqrt(x.size))
    logs = np.log(x[:k] / x[k])
    m = float(logs.mean())
    return math.inf if m == 0 else 1.0 / m


def _estimate(samples, scale: float, divergence_index: float) -> IntegralEstimate:
    x = np.asarray(samples, dtype=float)
    n = x.size
    mean = float(x.mean()) * scale
    se = float(x.std(ddof=1)) * abs(scale) / math.sqrt(n) if n > 1 else math.nan
    idx = hill_tail_index(x)
    div = idx < divergence_index
    if div:
        # the integrand has no finite mean: report divergence, not a number
        mean = math.copysign(math.inf, mean)
    return IntegralEstimate(mean, se, n, div, idx)


def integral_flow_average(phi: Cocycle, sampler: Callable, t: float, n_samples: int, rng,
                          mass: float = 1.0, divergence_index: float = 1.0) -> IntegralEstimate:
    """``I(Phi) = (1/t) int Phi(x, t) dmu`` by Monte Carlo.

    ``sampler(rng)`` draws from ``mu / mass``.
    """
    if t == 0:
        raise ValueError("t must be nonzero")
    vals = np.array([phi(sampler(rng), t) for _ in range(n_samples)], dtype=float)
    return _estimate(vals, mass / t, divergence_index)


@dataclass(frozen=True)
class CrossSection:
    """Base sampler for ``mu_B / mass``, return time, and total base mass."""

    sampler: Callable
    return_time: Callable
    mass: float = 1.0


def integral_cross_section(phi: Cocycle, section: CrossSection, n_samples: int, rng,
                           divergence_index: float = 1.0) -> IntegralEstimate:
    """``I(Phi) = int_B Phi(x, r(x)) dmu_B`` by Monte Carlo."""
    vals = np.empty(n_samples)
    for i in range(n_samples):
        x = section.sampler(rng)
        vals[i] = phi(x, section.return_time(x))
    return _estimate(vals, section.mass, divergence_index)


def birkhoff_cocycle(phi: Cocycle, x, T: float) -> float:
    return phi(x, T) / T


def hopf_ratio(phi: Cocycle, psi: Cocycle, x, T: float) -> float:
    den = psi(x, T)
    if den == 0:
        raise NotYetRecurrent(f"denominator cocycle is 0 at T={T}")
    return phi(x, T) / den


# ----------------------------------------------------------------------
# renewal testbed
# ----------------------------------------------------------------------
def _gaps_covering(law, span: float, rng, first=None) -> np.ndarray:
    from .renewal import _gaps_until

    if first is None:
        return _gaps_until(law, span, rng)
    if first > span:
        return np.array([first])
    return np.concatenate(([first], _gaps_until(law, span - first, rng)))


def renewal_orbit(law, rng, span: float, stationary: bool = False) -> RenewalOrbit:
    """Two-sided renewal orbit with events covering ``[-span, span]`` around
    the position.

    ``stationary=False``: the position is an event (the cross-section
    ``B``).  ``stationary=True``: the gap containing the position is
    size-biased and the position uniform inside it (the special-flow measure
    normalized to a probability); needs a law with ``sample_size_biased``.
    """
    if stationary:
        g0 = float(law.sample_size_biased(rng))
        u = g0 * rng.random()
        fwd = _gaps_covering(law, span + u, rng, first=g0)
    else:
        u = 0.0
        fwd = _gaps_covering(law, span, rng)
    back = _gaps_covering(law, span, rng)
    events = np.concatenate((-np.cumsum(back)[::-1], [0.0], np.cumsum(fwd)))
    return RenewalOrbit(events, u)


def renewal_section(law, span: float) -> CrossSection:
    """Section ``{event at the current position}`` with probability base measure."""
    return CrossSection(
        sampler=lambda rng: renewal_orbit(law, rng, span),
        return_time=lambda x: x.return_time(),
    )


def stationary_sampler(law, span: float) -> Callable:
    return lambda rng: renewal_orbit(law, rng, span, stationary=True)
