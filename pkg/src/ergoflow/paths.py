"""Finite-window piecewise paths and the flows that act on them.

A :class:`PiecewisePath` is either a right-continuous step function or a
continuous piecewise-linear function on a closed window ``[t_0, t_n]``.
Every operation states the window of its output; evaluation outside the
window raises :class:`DomainError` instead of extrapolating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

STEP = "step"
LINEAR = "linear"


class DomainError(ValueError):
    """Argument outside the window (or domain) an operation is defined on."""


class InvariantError(ValueError):
    """Input violates a structural invariant (e.g. monotonicity)."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PiecewisePath:
    """Càdlàg path on ``[breakpoints[0], breakpoints[-1]]``.

    For ``kind="step"`` the value on ``[t_i, t_{i+1})`` is ``values[i]`` and
    the value at the right edge is ``values[-1]``.  For ``kind="linear"`` the
    path interpolates linearly between the knots ``(t_i, values[i])``.
    """

    kind: str
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in (STEP, LINEAR):
            raise ValueError(f"unknown path kind {self.kind!r}")
        bp = _frozen(self.breakpoints)
        vals = _frozen(self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if bp.ndim != 1 or bp.shape != vals.shape or bp.size == 0:
            raise InvariantError("breakpoints and values must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(vals))):
            raise InvariantError("breakpoints and values must be finite")
        if bp.size > 1 and not np.all(np.diff(bp) > 0):
            raise InvariantError("breakpoints must be strictly increasing")
        if self.kind == LINEAR and bp.size < 2:
            raise InvariantError("a linear path needs at least two knots")

    # -- basic accessors -------------------------------------------------
    @property
    def t_min(self) -> float:
        return float(self.breakpoints[0])

    @property
    def t_max(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def window(self) -> "Window":
        return Window(self.t_min, self.t_max)

    @property
    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    @property
    def monotone_flag(self) -> str:
        return "nondecreasing" if self.is_nondecreasing else "general-BV"

    def __call__(self, t):
        return evaluate(self, t)

    def __repr__(self):
        return (f"PiecewisePath(kind={self.kind!r}, n={self.breakpoints.size}, "
                f"window=[{self.t_min:g}, {self.t_max:g}])")

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "breakpoints": self.breakpoints.tolist(),
                "values": self.values.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewisePath":
        return cls(d["kind"], d["breakpoints"], d["values"])

    @classmethod
    def from_json(cls, s: str) -> "PiecewisePath":
        return cls.from_dict(json.loads(s))


class Window(NamedTuple):
    t_min: float
    t_max: float

    def contains(self, t, tol: float = 0.0) -> bool:
        t = np.asarray(t)
        return bool(np.all((t >= self.t_min - tol) & (t <= self.t_max + tol)))

    def intersect(self, other: "Window") -> "Window":
        lo, hi = max(self.t_min, other.t_min), min(self.t_max, other.t_max)
        if not lo < hi:
            raise DomainError(f"windows {self} and {other} do not overlap")
        return Window(lo, hi)


class GraphSegment(NamedTuple):
    """Straight piece ``(x0, y0) -> (x1, y1)`` of a completed graph."""

    x0: float
    y0: float
    x1: float
    y1: float


def step_path(breakpoints, values) -> PiecewisePath:
    return PiecewisePath(STEP, breakpoints, values)


def linear_path(knots_t, knots_v) -> PiecewisePath:
    return PiecewisePath(LINEAR, knots_t, knots_v)


def constant_path(value: float, window: Window, kind: str = STEP) -> PiecewisePath:
    return PiecewisePath(kind, [window.t_min, window.t_max], [value, value])


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------
def _check_in_window(p: PiecewisePath, t: np.ndarray) -> None:
    if t.size and (np.min(t) < p.t_min or np.max(t) > p.t_max or np.any(np.isnan(t))):
        raise DomainError(f"evaluation point outside window [{p.t_min}, {p.t_max}]")


def evaluate(p: PiecewisePath, t):
    """Right-continuous value ``p(t) = p(t+)``; vectorised over ``t``."""
    arr = np.asarray(t, dtype=float)
    _check_in_window(p, arr)
    if p.kind == STEP:
        idx = np.searchsorted(p.breakpoints, arr, side="right") - 1
        out = p.values[idx]
    else:
        out = np.interp(arr, p.breakpoints, p.values)
    return float(out) if out.ndim == 0 else out


def left_limit(p: PiecewisePath, t):
    """``p(t-)``; at the left window edge this is ``p(t_min)`` by convention."""
    arr = np.asarray(t, dtype=float)
    _check_in_window(p, arr)
    if p.kind == STEP:
        idx = np.searchsorted(p.breakpoints, arr, side="left") - 1
        out = p.values[np.maximum(idx, 0)]
    else:
        out = np.interp(arr, p.breakpoints, p.values)
    return float(out) if out.ndim == 0 else out


def restrict(p: PiecewisePath, window: Window) -> PiecewisePath:
    """Restriction of ``p`` to a sub-window."""
    lo, hi = window
    if lo < p.t_min or hi > p.t_max or not lo < hi:
        raise DomainError(f"{window} is not a sub-window of {p.window}")
    bp = p.breakpoints
    inner = bp[(bp > lo) & (bp < hi)]
    new_bp = np.concatenate(([lo], inner, [hi]))
    return PiecewisePath(p.kind, new_bp, evaluate(p, new_bp))


# ----------------------------------------------------------------------
# generalized inverse and graphs
# ----------------------------------------------------------------------
def generalized_inverse(p: PiecewisePath) -> PiecewisePath:
    """``p^(y) = inf{s : p(s) > y}`` on ``[p(t_min), sup p]``.

    At ``y = sup p`` the infimum is over the empty set; the value there is
    taken to be the left limit ``t_max`` so the output keeps a closed window.
    Step paths invert to step paths.  Linear paths must be strictly
    increasing, since a flat stretch would become a jump.
    """
    if not p.is_nondecreasing:
        raise InvariantError("generalized inverse needs a nondecreasing path")
    if p.kind == LINEAR:
        if not np.all(np.diff(p.values) > 0):
            raise InvariantError("linear path with a flat stretch has a discontinuous inverse")
        return PiecewisePath(LINEAR, p.values, p.breakpoints)
    v, t = p.values, p.breakpoints
    # last index of every run of equal values
    last = np.flatnonzero(np.append(np.diff(v) > 0, True))
    if last.size < 2:
        raise InvariantError("constant path has no generalized inverse on a nonempty window")
    levels = v[last]
    nxt = np.minimum(last + 1, t.size - 1)
    out = t[nxt].copy()
    out[-1] = t[-1]
    return PiecewisePath(STEP, levels, out)


def completed_graph(p: PiecewisePath) -> list[GraphSegment]:
    """Completed graph as a monotone polyline, jumps filled by vertical segments."""
    if p.kind == LINEAR:
        pts = list(zip(p.breakpoints, p.values))
    else:
        t, v = p.breakpoints, p.values
        pts = [(t[0], v[0])]
        for i in range(1, t.size):
            pts.append((t[i], v[i - 1]))
            pts.append((t[i], v[i]))
    segs = [GraphSegment(float(x0), float(y0), float(x1), float(y1))
            for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:])]
    return canonical_graph(segs)


def dual_graph(segments: Iterable[GraphSegment]) -> list[GraphSegment]:
    return [GraphSegment(s.y0, s.x0, s.y1, s.x1) for s in segments]


def translate_graph(segments: Iterable[GraphSegment], dx: float, dy: float) -> list[GraphSegment]:
    return [GraphSegment(s.x0 + dx, s.y0 + dy, s.x1 + dx, s.y1 + dy) for s in segments]


def canonical_graph(segments: Sequence[GraphSegment], tol: float = 0.0) -> list[GraphSegment]:
    """Drop degenerate pieces, merge collinear neighbours, drop vertical
    pieces on the left window edge (the left limit there is undefined)."""
    segs = [s for s in segments if abs(s.x1 - s.x0) > tol or abs(s.y1 - s.y0) > tol]
    merged: list[GraphSegment] = []
    for s in segs:
        if merged:
            m = merged[-1]
            ax, ay = m.x1 - m.x0, m.y1 - m.y0
            bx, by = s.x1 - s.x0, s.y1 - s.y0
            cross = ax * by - ay * bx
            scale = max(abs(ax) + abs(ay), abs(bx) + abs(by), 1.0)
            if abs(cross) <= tol * scale * scale and ax * bx + ay * by > 0:
                merged[-1] = GraphSegment(m.x0, m.y0, s.x1, s.y1)
                continue
        merged.append(s)
    if merged:
        x_left = min(min(s.x0, s.x1) for s in merged)
        while merged and abs(merged[0].x1 - merged[0].x0) <= tol and abs(merged[0].x0 - x_left) <= tol:
            merged.pop(0)
    return merged


def graphs_equal(a: Sequence[GraphSegment], b: Sequence[GraphSegment], tol: float = 1e-9) -> bool:
    ca, cb = canonical_graph(a, tol), canonical_graph(b, tol)
    if len(ca) != len(cb):
        return False
    return all(max(abs(p - q) for p, q in zip(s, r)) <= tol * max(1.0, *map(abs, s))
               for s, r in zip(ca, cb))


# ----------------------------------------------------------------------
# flows
# ----------------------------------------------------------------------
def scaling_flow(p: PiecewisePath, t: float, beta: float) -> PiecewisePath:
    """``(tau_t f)(x) = f(e^t x) / e^{beta t}``; window ``e^{-t}`` times the input's."""
    return PiecewisePath(p.kind, p.breakpoints * math.exp(-t), p.values * math.exp(-beta * t))


def increment_flow(p: PiecewisePath, s: float) -> PiecewisePath:
    """``(eta_s f)(x) = f(x + s) - f(s)``; window shifted by ``-s``."""
    if not p.t_min <= s <= p.t_max:
        raise DomainError(f"shift {s} outside window {p.window}")
    return PiecewisePath(p.kind, p.breakpoints - s, p.values - evaluate(p, s))


def dual_increment_flow(g: PiecewisePath, s: float) -> PiecewisePath:
    """Increment subflow acting on a dual path: ``g(. + g^(s)) - s``.

    This is ``I(eta_s f)`` written in terms of ``g = I(f)`` alone, using
    ``f(s) = I(g)(s)`` on the resolved window.
    """
    shift = evaluate(generalized_inverse(g), s)
    return PiecewisePath(g.kind, g.breakpoints - shift, g.values - s)


def commutation_check(p: PiecewisePath, s: float, t: float, alpha: float,
                      dual: bool = False, snap: float = 1e-9) -> float:
    """Sup-norm gap between the two sides of the scaling/increment
    commutation relation on their common window.

    ``dual=False``: ``tau_t . eta_s`` against ``eta_{e^{-t}s} . tau_t`` with
    the scaling flow of index ``1/alpha``.  ``dual=True``: ``p`` is a dual
    path and the hatted flows (index ``alpha``) are used, with the shift
    ``e^{-alpha t} s``.
    """
    if s == 0 or t == 0:
        return 0.0
    if dual:
        lhs = scaling_flow(dual_increment_flow(p, s), t, alpha)
        rhs = dual_increment_flow(scaling_flow(p, t, alpha), math.exp(-alpha * t) * s)
    else:
        lhs = scaling_flow(increment_flow(p, s), t, 1.0 / alpha)
        rhs = increment_flow(scaling_flow(p, t, 1.0 / alpha), math.exp(-t) * s)
    return sup_distance(lhs, rhs, lhs.window.intersect(rhs.window), snap=snap)


# ----------------------------------------------------------------------
# distances and arithmetic
# ----------------------------------------------------------------------
def _snap_paths(ps: Sequence[PiecewisePath], window: Window, snap: float):
    """Move breakpoints (and window ends) that lie within ``snap`` of each
    other, relative to the window scale, onto one shared representative."""
    lo, hi = window
    pts = np.unique(np.concatenate([q.breakpoints for q in ps] + [np.array([lo, hi])]))
    scale = max(abs(lo), abs(hi)) or 1.0
    keep = np.append(True, np.diff(pts) > snap * scale)
    starts = pts[keep]

    def move(x):
        return starts[np.searchsorted(starts, x, side="right") - 1]

    out = []
    for q in ps:
        bp = move(q.breakpoints)
        # collapsed breakpoints keep the right-most value (cadlag convention)
        last = np.append(np.diff(bp) > 0, True)
        out.append(PiecewisePath(q.kind, bp[last], q.values[last]))
    return out, Window(float(move(lo)), float(move(hi)))


def _diff_profile(p: PiecewisePath, q: PiecewisePath, window: Window, snap: float):
    """Points and |p - q| just right of and just left of each merged point."""
    for r in (p, q):
        if window.t_min < r.t_min or window.t_max > r.t_max:
            raise DomainError(f"window {window} not covered by path window {r.window}")
    if snap > 0:
        (p, q), window = _snap_paths((p, q), window, snap)
    lo, hi = window
    pts = np.concatenate((p.breakpoints, q.breakpoints, [lo, hi]))
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    right = np.abs(evaluate(p, pts) - evaluate(q, pts))
    left = np.abs(left_limit(p, pts) - left_limit(q, pts))
    left[0] = right[0]
    return pts, left, right, p, q


def sup_distance(p: PiecewisePath, q: PiecewisePath, window: Window | None = None,
                 snap: float = 0.0) -> float:
    """Exact ``sup |p - q|`` over ``window``.

    The difference of two piecewise paths is piecewise linear between merged
    breakpoints, so the sup is attained at a breakpoint or a jump side.
    ``snap`` (relative to the window scale) identifies breakpoints closer than
    that, absorbing round-off in breakpoint positions.
    """
    if window is None:
        window = p.window.intersect(q.window)
    window = Window(*window)
    _, left, right, _, _ = _diff_profile(p, q, window, snap)
    return float(max(left.max(), right.max()))


def running_sup_distance(p: PiecewisePath, q: PiecewisePath, start: float, ends,
                         snap: float = 0.0) -> np.ndarray:
    """``sup_{[start, u]} |p - q|`` for each ``u`` in ``ends`` (one pass)."""
    ends = np.asarray(ends, dtype=float)
    window = Window(start, float(ends.max()))
    pts, left, right, p, q = _diff_profile(p, q, window, snap)
    ends = np.clip(ends, pts[0], pts[-1])
    # value reached by the time we pass point i (left side at i, right side at i)
    through = np.maximum.accumulate(np.maximum(left, right))
    before = np.concatenate(([0.0], through[:-1]))
    idx = np.searchsorted(pts, ends, side="right") - 1
    idx = np.clip(idx, 0, pts.size - 1)
    at_end = np.abs(evaluate(p, ends) - evaluate(q, ends))
    left_at_end = np.abs(left_limit(p, ends) - left_limit(q, ends))
    exact_hit = pts[idx] == ends
    base = np.where(exact_hit, np.maximum(before[idx], left[idx]), through[idx])
    return np.maximum(base, np.maximum(at_end, left_at_end))


def combine(p: PiecewisePath, q: PiecewisePath, op=np.subtract,
            window: Window | None = None) -> PiecewisePath:
    """Pointwise ``op(p, q)`` for two step paths or two linear paths."""
    if p.kind != q.kind:
        raise ValueError("combine needs paths of the same kind")
    if window is None:
        window = p.window.intersect(q.window)
    lo, hi = window
    pts = np.concatenate((p.breakpoints, q.breakpoints, [lo, hi]))
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    return PiecewisePath(p.kind, pts, op(evaluate(p, pts), evaluate(q, pts)))


def abs_path(p: PiecewisePath) -> PiecewisePath:
    """``|p|``; linear paths get a knot at every zero crossing."""
    if p.kind == STEP:
        return PiecewisePath(STEP, p.breakpoints, np.abs(p.values))
    t, v = p.breakpoints, p.values
    cross = np.flatnonzero(v[:-1] * v[1:] < 0)
    tz = t[cross] - v[cross] * (t[cross + 1] - t[cross]) / (v[cross + 1] - v[cross])
    tt = np.concatenate((t, tz))
    order = np.argsort(tt, kind="stable")
    vv = np.concatenate((np.abs(v), np.zeros(tz.size)))[order]
    tt = tt[order]
    keep = np.append(True, np.diff(tt) > 0)
    return PiecewisePath(LINEAR, tt[keep], vv[keep])


def hahn_decompose(p: PiecewisePath, anchor: float | None = None):
    """Split ``p - p(anchor)`` into ``p_plus - p_minus``.

    Both parts are nondecreasing, vanish at ``anchor`` (default: left window
    edge) and charge disjoint sets: each breakpoint interval or jump feeds its
    increment to exactly one of them.
    """
    if anchor is None:
        anchor = p.t_min
    dv = np.diff(p.values)
    up = np.concatenate(([0.0], np.cumsum(np.maximum(dv, 0.0))))
    down = np.concatenate(([0.0], np.cumsum(np.maximum(-dv, 0.0))))
    plus = PiecewisePath(p.kind, p.breakpoints, up)
    minus = PiecewisePath(p.kind, p.breakpoints, down)
    a_plus, a_minus = evaluate(plus, anchor), evaluate(minus, anchor)
    return (PiecewisePath(p.kind, p.breakpoints, up - a_plus),
            PiecewisePath(p.kind, p.breakpoints, down - a_minus))


def power_weighted_integral(p: PiecewisePath, lo: float, hi: float, gamma: float) -> float:
    """Exact ``int_lo^hi p(t) t^gamma dt`` for ``0 < lo < hi``."""
    return float(np.sum(_power_weighted_pieces(p, lo, hi, gamma)[2]))


def _antiderivative_power(t, gamma):
    # F with F' = t^gamma
    if gamma == -1.0:
        return np.log(t)
    return t ** (gamma + 1.0) / (gamma + 1.0)


def _power_weighted_pieces(p: PiecewisePath, lo: float, hi: float, gamma: float):
    if not 0 < lo < hi:
        raise DomainError("power-weighted integral needs 0 < lo < hi")
    if lo < p.t_min or hi > p.t_max:
        raise DomainError(f"[{lo}, {hi}] not inside path window {p.window}")
    bp = p.breakpoints
    inner = bp[(bp > lo) & (bp < hi)]
    a = np.concatenate(([lo], inner))
    b = np.concatenate((inner, [hi]))
    if p.kind == STEP:
        v = evaluate(p, a)
        contrib = v * (_antiderivative_power(b, gamma) - _antiderivative_power(a, gamma))
    else:
        va, vb = evaluate(p, a), evaluate(p, b)
        slope = (vb - va) / (b - a)
        icpt = va - slope * a
        contrib = (icpt * (_antiderivative_power(b, gamma) - _antiderivative_power(a, gamma))
                   + slope * (_antiderivative_power(b, gamma + 1.0)
                              - _antiderivative_power(a, gamma + 1.0)))
    return a, b, contrib
