"""The renewal transformation in four coordinates (tower, event word,
increment word, Markov renewal shift) and the discrete order-two averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .paths import DomainError
from .renewal import Geometric, ParetoInteger, Table

TOWER, EVENT, INCREMENT, MARKOV = "tower", "event", "increment", "markov"
VARIANTS = (TOWER, EVENT, INCREMENT, MARKOV)


# ----------------------------------------------------------------------
# gap pmf, invariant vector, total mass
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class GapPMF:
    """``p[k-1] = P(gap = k)`` for ``k = 1..K``; ``folded_mass`` is the tail
    beyond the truncation that was added to ``p_K`` (0 for exact tables)."""

    p: np.ndarray
    folded_mass: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0):
            raise ValueError("pmf must be a nonempty nonnegative vector")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("pmf must sum to 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "cdf", np.cumsum(p))

    @property
    def K(self) -> int:
        return self.p.size

    @classmethod
    def from_law(cls, law, K: int = 10_000) -> "GapPMF":
        if isinstance(law, Table):
            return cls(np.asarray(law.p))
        k = np.arange(1, K + 1)
        p = np.asarray(law.pmf(k), dtype=float)
        tail = float(law.survival(K))
        p[-1] += tail
        # absorb rounding so the vector sums to one
        p[-1] += 1.0 - p.sum()
        return cls(p, tail)


def invariant_vector(pmf: GapPMF) -> np.ndarray:
    """``pi_k = sum_{i >= k} p_i``; ``pi_1 = 1``."""
    return np.cumsum(pmf.p[::-1])[::-1]


def apply_transition(pi: np.ndarray, pmf: GapPMF) -> np.ndarray:
    """Row vector times ``P``: ``(pi P)_k = pi_1 p_k + pi_{k+1}``."""
    out = pi[0] * pmf.p
    out[:-1] += pi[1:]
    return out


def invariance_residual(pmf: GapPMF) -> float:
    pi = invariant_vector(pmf)
    return float(np.max(np.abs(apply_transition(pi, pmf) - pi)))


class TotalMass(NamedTuple):
    value: float
    divergent: bool


def total_mass(law) -> TotalMass:
    """``sum k p_k``; divergent for integer Pareto tails with ``alpha <= 1``."""
    if isinstance(law, ParetoInteger):
        if law.alpha <= 1:
            return TotalMass(math.inf, True)
        return TotalMass(law.mean, False)
    if isinstance(law, Geometric):
        return TotalMass(1.0 / law.q, False)
    if isinstance(law, Table):
        law = GapPMF(np.asarray(law.p))
    if isinstance(law, GapPMF):
        return TotalMass(float(np.sum(np.arange(1, law.K + 1) * law.p)), False)
    raise TypeError(f"no total mass for {type(law).__name__}")


# ----------------------------------------------------------------------
# transitions and orbits
# ----------------------------------------------------------------------
def gap_from_uniform(law, u):
    """Inverse-CDF gap from ``u`` in [0, 1): the Markov transition out of state 1."""
    u = np.asarray(u, dtype=float)
    if isinstance(law, GapPMF):
        k = np.searchsorted(law.cdf, u, side="right") + 1
        return np.minimum(k, law.K)
    if isinstance(law, ParetoInteger):
        # P(X > n) = (n+1)^-alpha; X > n iff 1 - u < (n+1)^-alpha
        x = np.ceil((1.0 - u) ** (-1.0 / law.alpha) - 1.0)
        return np.maximum(x, 1).astype(np.int64)
    if isinstance(law, Table):
        return gap_from_uniform(GapPMF(np.asarray(law.p)), u)
    if isinstance(law, Geometric):
        return np.maximum(np.ceil(np.log1p(-u) / math.log1p(-law.q)), 1).astype(np.int64)
    raise TypeError(f"no inverse cdf for {type(law).__name__}")


def markov_transition(state: int, u: float, law) -> int:
    """One step of the renewal shift: ``m -> m - 1`` for ``m > 1``, and
    ``1 -> k`` with probability ``p_k`` (inverse CDF of ``u``)."""
    if state > 1:
        return state - 1
    return int(gap_from_uniform(law, u))


@dataclass(frozen=True, eq=False)
class RenewalWord:
    """Shared gap stream with an event at time 0; time runs over
    ``0..length-1`` where ``length`` is the last event or ``horizon`` if
    smaller (the last gap may reach far past the simulated window)."""

    gaps: np.ndarray
    horizon: int | None = None

    def __post_init__(self):
        g = np.asarray(self.gaps, dtype=np.int64)
        if g.size == 0 or np.any(g < 1):
            raise ValueError("gaps must be positive integers")
        object.__setattr__(self, "gaps", g)
        object.__setattr__(self, "events", np.concatenate(([0], np.cumsum(g))))

    @property
    def length(self) -> int:
        end = int(self.events[-1])
        return end if self.horizon is None else min(end, int(self.horizon))

    def event_word(self) -> np.ndarray:
        y = np.zeros(self.length, dtype=np.int8)
        ev = self.events[:-1]
        y[ev[ev < self.length]] = 1
        return y

    def increment_word(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.event_word(), dtype=np.int64)))

    def markov_word(self) -> np.ndarray:
        # inside a gap g the states run 1, g, g-1, ..., 2
        n = np.arange(self.length)
        k = np.searchsorted(self.events, n, side="right") - 1
        x = self.events[k + 1] - n + 1
        x[self.events[k] == n] = 1
        return x


def markov_orbit(law, n_steps: int, rng) -> RenewalWord:
    """Renewal-shift orbit started in state 1, run for at least ``n_steps``;
    every visit to state 1 draws the next gap by inverse CDF."""
    chunks, total = [], 0
    batch = max(16, int(math.sqrt(n_steps)))
    while total < n_steps:
        g = gap_from_uniform(law, rng.random(batch))
        chunks.append(g)
        total += int(g.sum())
        batch *= 2
    g = np.concatenate(chunks)
    cut = int(np.searchsorted(np.cumsum(g), n_steps, side="left"))
    return RenewalWord(g[: cut + 1], horizon=n_steps)


# ----------------------------------------------------------------------
# the four models
# ----------------------------------------------------------------------
class ModelState(NamedTuple):
    variant: str
    word: RenewalWord
    pos: object          # (idx, j) for the tower, time n otherwise

    def time(self) -> int:
        if self.variant == TOWER:
            idx, j = self.pos
            return int(self.word.events[idx]) + j
        return int(self.pos)

    def symbol(self):
        """Coordinate read at the current position in the model's own alphabet."""
        w = self.word
        if self.variant == TOWER:
            idx, j = self.pos
            return (int(w.gaps[idx]), j)
        n = int(self.pos)
        if n >= w.length:
            raise DomainError("position beyond the simulated window")
        k = int(np.searchsorted(w.events, n, side="left"))
        if self.variant == EVENT:
            return int(w.events[k] == n)
        if self.variant == INCREMENT:
            return k                    # N_n: events in 0..n-1
        return _markov_at(w, n)


def _markov_at(w: RenewalWord, n: int) -> int:
    k = int(np.searchsorted(w.events, n, side="right")) - 1
    e = int(w.events[k])
    return 1 if e == n else int(w.events[k + 1]) - n + 1


def initial_state(word: RenewalWord, variant: str) -> ModelState:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    return ModelState(variant, word, (0, 0) if variant == TOWER else 0)


def step(state: ModelState) -> ModelState:
    """``T(x, j) = (x, j+1)`` below the roof and ``(sigma x, 0)`` at it for the
    tower; the left shift for the three word models."""
    if state.variant == TOWER:
        idx, j = state.pos
        if j + 1 < state.word.gaps[idx]:
            return state._replace(pos=(idx, j + 1))
        if idx + 1 >= state.word.gaps.size:
            raise DomainError("tower ran past the gap stream")
        return state._replace(pos=(idx + 1, 0))
    return state._replace(pos=int(state.pos) + 1)


def isomorphism_maps(state: ModelState, variant_b: str) -> ModelState:
    """Carry a state of one model to the corresponding state of another."""
    n = state.time()
    w = state.word
    if n >= w.length:
        raise DomainError("state lies beyond the shared window")
    if variant_b == TOWER:
        idx = int(np.searchsorted(w.events, n, side="right")) - 1
        return ModelState(TOWER, w, (idx, n - int(w.events[idx])))
    if variant_b not in VARIANTS:
        raise ValueError(f"unknown variant {variant_b!r}")
    return ModelState(variant_b, w, n)


# word-level codings
def tower_orbit_word(word: RenewalWord, n_steps: int) -> np.ndarray:
    """Run the tower dynamics and read ``Y = 1{j == 0}`` along the orbit."""
    gaps = word.gaps
    out = np.empty(n_steps, dtype=np.int8)
    idx, j = 0, 0
    for n in range(n_steps):
        out[n] = j == 0
        j += 1
        if j == gaps[idx]:
            idx, j = idx + 1, 0
    return out


def markov_to_event(x) -> np.ndarray:
    return (np.asarray(x) == 1).astype(np.int8)


def event_to_markov(y) -> np.ndarray:
    """Markov states up to and including the last event of the window."""
    y = np.asarray(y)
    ev = np.flatnonzero(y == 1)
    if ev.size == 0:
        raise DomainError("no event in the window; Markov states undetermined")
    n = np.arange(ev[-1] + 1)
    nxt = ev[np.searchsorted(ev, n, side="left")]
    x = nxt - n + 1
    x[y[: ev[-1] + 1] == 1] = 1
    return x


def event_to_increment(y) -> np.ndarray:
    return np.concatenate(([0], np.cumsum(np.asarray(y), dtype=np.int64)))


def increment_to_event(ntilde) -> np.ndarray:
    return np.diff(np.asarray(ntilde)).astype(np.int8)


def increment_shift(ntilde) -> np.ndarray:
    """``(Theta N)_n = N_{n+1} - N_1``."""
    ntilde = np.asarray(ntilde)
    return ntilde[1:] - ntilde[1]


# ----------------------------------------------------------------------
# order-two averages along an orbit
# ----------------------------------------------------------------------
def discrete_order_two(x, phi, k: int, a_hat) -> tuple[float, float]:
    """Both order-two averages of an observable along a Markov-state word.

    ``x``: state word with ``x[0]`` the initial state; ``phi``: per-state
    values (callable on the word or an array indexed by state, index 0
    unused); ``a_hat``: normalizer.  Returns the ergodic-sum form
    ``(1/log k) sum_{n<=k} S_n phi / (a_hat(n) n)`` and the Chung-Erdos form
    ``(1/log a_hat(k)) sum_{n<=k} phi(x_n) / a_hat(n)``.
    """
    x = np.asarray(x)
    if x.size < k + 1:
        raise DomainError("orbit shorter than k + 1")
    vals = phi(x[: k + 1]) if callable(phi) else np.asarray(phi, dtype=float)[
        np.minimum(x[: k + 1], len(phi) - 1)]
    vals = np.asarray(vals, dtype=float)
    n = np.arange(1, k + 1, dtype=float)
    s = np.cumsum(vals[:k])                 # S_n phi = sum_{i<n} phi(x_i)
    ah = np.asarray(a_hat(n), dtype=float)
    form_i = float(np.sum(s / (ah * n)) / math.log(k))
    form_ii = float(np.sum(vals[1: k + 1] / ah) / math.log(float(a_hat(float(k)))))
    return form_i, form_ii


def state_indicator(m: int):
    return lambda x: (np.asarray(x) == m).astype(float)


def visit_counts(x, states) -> dict:
    x = np.asarray(x)
    return {m: int(np.count_nonzero(x == m)) for m in states}


# ----------------------------------------------------------------------
# exact expectations (renewal sequence)
# ----------------------------------------------------------------------
def renewal_sequence(law, n: int) -> np.ndarray:
    """``u_i = P(event at time i)`` for ``i < n``, from ``U(z) = 1/(1 - P(z))``
    by Newton power-series inversion with FFT products."""
    from scipy.signal import fftconvolve

    if isinstance(law, GapPMF):
        p = np.zeros(n)
        m = min(n - 1, law.K)
        p[1: m + 1] = law.p[:m]
    else:
        p = np.zeros(n)
        p[1:] = law.pmf(np.arange(1, n))
    a = -p
    a[0] = 1.0
    b = np.array([1.0])
    m = 1
    while m < n:
        m = min(2 * m, n)
        corr = -fftconvolve(a[:m], b)[:m]
        corr[0] += 2.0
        b = fftconvolve(b, corr)[:m]
    return b


def state_probabilities(law, m: int, n: int, u: np.ndarray | None = None) -> np.ndarray:
    """``P(x_i = m)`` for ``i < n`` along the orbit started in state 1."""
    from scipy.signal import fftconvolve

    u = renewal_sequence(law, n) if u is None else u[:n]
    if m == 1:
        return u
    # x_i = m iff the last event j <= i - 1 is followed by a gap i - 1 - j + m
    k = np.arange(m, m + n)
    if isinstance(law, GapPMF):
        pm = np.where(k <= law.K, law.p[np.minimum(k, law.K) - 1], 0.0)
    else:
        pm = np.asarray(law.pmf(k), dtype=float)
    conv = fftconvolve(u, pm)[: n - 1]
    return np.concatenate(([0.0], conv))


def expected_discrete_order_two(law, m: int, k: int, a_hat) -> tuple[float, float]:
    """Exact expectations of both averages of ``discrete_order_two`` for
    ``phi = 1{state m}`` (finite-k bias oracle)."""
    q = state_probabilities(law, m, k + 1)
    n = np.arange(1, k + 1, dtype=float)
    ah = np.asarray(a_hat(n), dtype=float)
    es = np.cumsum(q[:k])
    form_i = float(np.sum(es / (ah * n)) / math.log(k))
    form_ii = float(np.sum(q[1: k + 1] / ah) / math.log(float(a_hat(float(k)))))
    return form_i, form_ii
