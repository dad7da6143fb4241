"""Gap laws, renewal paths and the normalizer triple ``(a_hat, a, h)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .paths import STEP, LINEAR, PiecewisePath, generalized_inverse
from .stable_ml import StableSpec, sample_stable


class DomainOfAttractionError(ValueError):
    """Gap law is not in the domain of attraction of a stable law of index < 1."""


@dataclass(frozen=True)
class ParetoContinuous:
    alpha: float

    def from_uniform(self, u):
        """Inversion ``X = U^{-1/alpha}`` for ``U`` in ``(0, 1]``."""
        return np.asarray(u, dtype=float) ** (-1.0 / self.alpha)

    def sample(self, rng, size=None):
        x = self.from_uniform(1.0 - rng.random(size))  # (0, 1]
        return float(x) if size is None else x

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 1.0, np.maximum(x, 1.0) ** -self.alpha)

    def cdf(self, x):
        return 1.0 - self.survival(x)

    @property
    def mean(self) -> float:
        return math.inf if self.alpha <= 1 else self.alpha / (self.alpha - 1)


@dataclass(frozen=True)
class ParetoInteger:
    """Integer gaps with ``P(X > n) = (n + 1)^-alpha``, ``n = 0, 1, ...``."""

    alpha: float

    def sample(self, rng, size=None):
        u = 1.0 - rng.random(size)
        x = np.maximum(np.ceil(u ** (-1.0 / self.alpha) - 1.0), 1.0)
        return float(x) if size is None else x

    def survival(self, x):
        n = np.floor(np.asarray(x, dtype=float))
        return np.where(n < 0, 1.0, (np.maximum(n, 0.0) + 1.0) ** -self.alpha)

    def cdf(self, x):
        return 1.0 - self.survival(x)

    def pmf(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(k >= 1, k ** -self.alpha - (k + 1.0) ** -self.alpha, 0.0)

    @property
    def mean(self) -> float:
        return math.inf if self.alpha <= 1 else float(np.sum(self.survival(np.arange(0, 10**7))))


@dataclass(frozen=True)
class StableGaps:
    spec: StableSpec

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    def sample(self, rng, size=None):
        return sample_stable(self.spec, rng, size)

    mean = math.inf


@dataclass(frozen=True)
class Geometric:
    """Gaps on ``{1, 2, ...}`` with ``P(X = k) = q (1 - q)^(k - 1)``."""

    q: float

    def sample(self, rng, size=None):
        x = rng.geometric(self.q, size)
        return float(x) if size is None else x.astype(float)

    def survival(self, x):
        n = np.floor(np.asarray(x, dtype=float))
        return np.where(n < 1, 1.0, (1.0 - self.q) ** np.maximum(n, 0.0))

    def cdf(self, x):
        return 1.0 - self.survival(x)

    def pmf(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(k >= 1, self.q * (1.0 - self.q) ** (k - 1.0), 0.0)

    def sample_size_biased(self, rng, size=None):
        # k p_k / E[X] is the law of G1 + G2 - 1 for independent geometrics
        x = rng.geometric(self.q, size) + rng.geometric(self.q, size) - 1
        return float(x) if size is None else x.astype(float)

    @property
    def mean(self) -> float:
        return 1.0 / self.q


@dataclass(frozen=True)
class Table:
    """Finite table ``P(X = k) = p[k - 1]`` for ``k = 1..K``."""

    p: tuple
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("table probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "p", tuple(p.tolist()))
        object.__setattr__(self, "_cum", np.cumsum(p))

    def sample(self, rng, size=None):
        u = rng.random(size)
        k = np.searchsorted(self._cum, u, side="right") + 1
        k = np.minimum(k, len(self.p))
        return float(k) if size is None else k.astype(float)

    def pmf(self, k):
        k = np.asarray(k)
        p = np.asarray(self.p)
        inside = (k >= 1) & (k <= p.size)
        return np.where(inside, p[np.clip(k, 1, p.size) - 1], 0.0)

    def survival(self, x):
        n = np.floor(np.asarray(x, dtype=float)).astype(int)
        cum = np.concatenate(([0.0], self._cum))
        return 1.0 - cum[np.clip(n, 0, len(self.p))]

    def cdf(self, x):
        return 1.0 - self.survival(x)

    def sample_size_biased(self, rng, size=None):
        k = np.arange(1, len(self.p) + 1)
        w = k * np.asarray(self.p)
        return Table(tuple(w / w.sum())).sample(rng, size)

    @property
    def mean(self) -> float:
        return float(np.sum(np.arange(1, len(self.p) + 1) * np.asarray(self.p)))


GapLaw = Union[ParetoContinuous, ParetoInteger, StableGaps, Geometric, Table]


def gap_law_from_config(d: dict) -> GapLaw:
    """``{"law": "pareto", "alpha": 0.5}`` and friends."""
    name = d.get("law")
    if name in ("pareto", "pareto-continuous"):
        return ParetoContinuous(float(d["alpha"]))
    if name in ("pareto-integer", "integer-pareto"):
        return ParetoInteger(float(d["alpha"]))
    if name == "stable":
        lam = d.get("laplace_scale")
        alpha = float(d["alpha"])
        spec = StableSpec.canonical(alpha) if lam is None else StableSpec(alpha, float(lam))
        return StableGaps(spec)
    if name == "geometric":
        return Geometric(float(d["q"]))
    if name == "table":
        return Table(tuple(d["p"]))
    raise ValueError(f"unknown gap law {name!r}")


def sample_gap(law: GapLaw, rng, size=None):
    return law.sample(rng, size)


# ----------------------------------------------------------------------
# normalizers
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class NormalizerTriple:
    """``a_hat`` (index alpha), ``a = a_hat^-1`` (index 1/alpha), ``h = a^alpha``.

    ``power`` is set when ``a_hat(t) = t**power`` exactly, which lets the
    log-average estimators integrate in closed form.
    """

    alpha: float
    a_hat: Callable
    a: Callable
    h: Callable
    power: float | None = None


def normalizers(law: GapLaw) -> NormalizerTriple:
    if isinstance(law, (ParetoContinuous, StableGaps)):
        alpha = law.alpha
        return NormalizerTriple(
            alpha,
            a_hat=lambda t: np.power(t, alpha),
            a=lambda t: np.power(t, 1.0 / alpha),
            h=lambda t: np.asarray(t, dtype=float) * 1.0,
            power=alpha,
        )
    if isinstance(law, ParetoInteger):
        alpha = law.alpha
        return NormalizerTriple(
            alpha,
            a_hat=lambda t: np.power(np.asarray(t, dtype=float) + 1.0, alpha),
            a=lambda t: np.maximum(np.power(t, 1.0 / alpha) - 1.0, 0.0),
            h=lambda t: np.power(np.maximum(np.power(t, 1.0 / alpha) - 1.0, 0.0), alpha),
        )
    raise DomainOfAttractionError(
        f"{type(law).__name__} is not in the domain of attraction for alpha < 1")


# ----------------------------------------------------------------------
# renewal paths
# ----------------------------------------------------------------------
def _gaps_until(law: GapLaw, total: float, rng, batch: int = 256) -> np.ndarray:
    """Gaps drawn in batches until their sum strictly exceeds ``total``."""
    chunks = []
    acc = 0.0
    while True:
        g = np.asarray(law.sample(rng, batch), dtype=float)
        chunks.append(g)
        s = float(g.sum())
        if acc + s > total:
            break
        acc += s
        batch = min(batch * 2, 1 << 20)
    gaps = np.concatenate(chunks)
    cut = np.searchsorted(np.cumsum(gaps), total, side="right")
    return gaps[: cut + 1]


def counting_path(event_times, window: tuple, origin_event: bool = True) -> PiecewisePath:
    """Step path ``N(t)`` counting events in ``(0, t]`` (negative for ``t < 0``,
    counting events in ``(t, 0]``).  ``event_times`` need not include 0; when
    ``origin_event`` is set an event at 0 is counted on the negative side."""
    lo, hi = window
    ev = np.sort(np.asarray(event_times, dtype=float))
    pos = ev[(ev > 0) & (ev <= hi)]
    neg = ev[(ev < 0) & (ev > lo)]
    if origin_event:
        neg = np.append(neg, 0.0) if lo < 0 else neg
    # jump points: positive events, and for negative times the path drops
    # just before each event in (lo, 0], i.e. it is right-continuous with a
    # jump at the event time
    pts = np.concatenate((neg, pos))
    counts = np.concatenate((-np.arange(neg.size, 0, -1) + 1, np.arange(1, pos.size + 1)))
    # value on [pts[i], pts[i+1]) is counts[i]; below the first negative event
    # the value is -(number of events in (lo, 0])
    bp = np.concatenate(([lo], pts))
    vals = np.concatenate(([-(neg.size)], counts))
    # merge coincident breakpoints (coalesced events)
    keep = np.append(np.diff(bp) > 0, True)
    bp, vals = bp[keep], vals[keep]
    if bp[-1] < hi:
        bp = np.append(bp, hi)
        vals = np.append(vals, vals[-1])
    return PiecewisePath(STEP, bp, vals.astype(float))


@dataclass(frozen=True)
class RenewalSample:
    path: PiecewisePath
    gaps: np.ndarray
    event_times: np.ndarray
    negative_gaps: np.ndarray | None = None


def simulate_renewal(law: GapLaw, rng, *, T: float | None = None, n_events: int | None = None,
                     two_sided: bool = False, rng_negative=None) -> RenewalSample:
    """One- or two-sided renewal path with an event at time 0.

    Exactly one of ``T`` (window ``[0, T]``, or ``[-T, T]`` when two-sided)
    and ``n_events`` (window ``[0, S_n]``) must be given.  The value at ``t``
    counts events in ``(0, t]``; for negative ``t`` it is minus the number of
    events in ``(t, 0]``, the origin included.  Negative-time gaps come from
    ``rng_negative`` (a fresh child stream of ``rng`` if omitted).
    """
    if (T is None) == (n_events is None):
        raise ValueError("give exactly one of T and n_events")
    if T is not None:
        gaps = _gaps_until(law, T, rng)
        hi = float(T)
    else:
        gaps = np.asarray(law.sample(rng, int(n_events)), dtype=float)
        hi = None
    times = np.cumsum(gaps)
    if hi is None:
        hi = float(times[-1])
    neg_gaps = None
    lo = 0.0
    ev = times
    if two_sided:
        if rng_negative is None:
            rng_negative = rng.spawn(1)[0]
        span = hi
        neg_gaps = _gaps_until(law, span, rng_negative)
        neg_times = -np.cumsum(neg_gaps)
        lo = -span
        ev = np.concatenate((neg_times[::-1], times))
    path = counting_path(ev, (lo, hi), origin_event=two_sided)
    return RenewalSample(path, gaps, times, neg_gaps)


def renewal_from_partial_sums(gaps) -> PiecewisePath:
    """Counting path built as ``I(S_bar) - 1`` where ``S_bar(t) = S_[t]``.

    The window is ``[0, S_m]`` for ``m = len(gaps)``; it agrees with direct
    counting on ``[0, S_m)`` (at ``S_m`` itself the inverse is clamped).
    """
    gaps = np.asarray(gaps, dtype=float)
    s = np.concatenate(([0.0], np.cumsum(gaps)))
    s_bar = PiecewisePath(STEP, np.arange(s.size, dtype=float), s)
    inv = generalized_inverse(s_bar)
    return PiecewisePath(STEP, inv.breakpoints, inv.values - 1.0)


def return_sequence_mc(law: GapLaw, n: float, n_paths: int, rng):
    """Monte Carlo ``E[N(n)]`` with its standard error."""
    if n == 0:
        return 0.0, 0.0
    if n_paths < 2:
        raise ValueError("need at least two paths for a standard error")
    counts = np.empty(n_paths)
    for i in range(n_paths):
        counts[i] = count_events(law, n, rng)
    return float(counts.mean()), float(counts.std(ddof=1) / math.sqrt(n_paths))


def count_events(law: GapLaw, t: float, rng) -> int:
    """Number of renewal events in ``(0, t]`` for one fresh path."""
    gaps = _gaps_until(law, t, rng)
    return int(np.count_nonzero(np.cumsum(gaps) <= t))


@dataclass(frozen=True)
class CoupledPair:
    ml: PiecewisePath          # linear Mittag-Leffler approximant, Z^
    counting: PiecewisePath    # h o N_bar (h = identity for stable gaps)
    subordinator: PiecewisePath
    gaps: np.ndarray


def coupled_pair(spec: StableSpec, rng, *, n_events: int | None = None,
                 T: float | None = None, substeps: int = 1) -> CoupledPair:
    """Stable-gap coupling: gaps are the unit-time increments of one
    subordinator path, so ``S_n = Z(n)`` exactly.

    ``substeps`` refines the subordinator between integer times (the
    Mittag-Leffler approximant then sees the finer structure while the gaps
    are unchanged).  With ``T`` the path is extended until ``Z`` exceeds ``T``.
    """
    if (T is None) == (n_events is None):
        raise ValueError("give exactly one of T and n_events")
    m = int(substeps)
    fine = []
    total = 0.0
    n_done = 0
    batch = 1024 if n_events is None else int(n_events)
    while True:
        inc = np.asarray(sample_stable(spec, rng, batch * m)) * (1.0 / m) ** (1.0 / spec.alpha)
        fine.append(inc)
        n_done += batch
        total += float(inc.sum())
        if n_events is not None or total > T:
            break
        batch *= 2
    inc = np.concatenate(fine)
    z_vals = np.concatenate(([0.0], np.cumsum(inc)))
    grid = np.arange(z_vals.size, dtype=float) / m
    if T is not None:
        # keep whole unit cells up to the first integer time with Z > T
        n_needed = int(np.searchsorted(z_vals[::m], T, side="right"))
        z_vals = z_vals[: n_needed * m + 1]
        grid = grid[: n_needed * m + 1]
    z = PiecewisePath(STEP, grid, z_vals)
    s = z_vals[::m]
    gaps = np.diff(s)
    first = np.append(True, np.diff(z_vals) > 0)
    ml = PiecewisePath(LINEAR, z_vals[first], grid[first])
    counting = counting_path(s[1:], (0.0, float(s[-1])), origin_event=False)
    return CoupledPair(ml, counting, z, gaps)
