"""Order-two (log-time) averages, Cesaro distances along the scaling flow,
moment convergence and the reproducible ensemble runner."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .paths import (STEP, DomainError, PiecewisePath, evaluate,
                    power_weighted_integral, running_sup_distance)
from .renewal import NormalizerTriple, StableGaps
from .stable_ml import StableSpec, sample_stable


class ToleranceError(ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


# ----------------------------------------------------------------------
# log averages
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LogAverageResult:
    """``value`` at ``T`` plus the running average at the end of each log-time
    block ``[e^{2^{j-1}}, e^{2^j}]`` (``block_ends``, ``block_values``)."""

    value: float
    T: float
    block_ends: tuple = ()
    block_values: tuple = ()


def log_blocks(T: float) -> np.ndarray:
    """Block ends ``e^{2^j}`` below ``T``, then ``T`` itself."""
    L = math.log(T)
    ends = [math.exp(2.0 ** j) for j in range(0, 64) if 2.0 ** j < L]
    return np.array(ends + [T])


def _with_blocks(piece_integral: Callable[[float, float], float], T: float) -> LogAverageResult:
    ends = log_blocks(T)
    lo = np.concatenate(([1.0], ends[:-1]))
    parts = np.array([piece_integral(a, b) for a, b in zip(lo, ends)])
    running = np.cumsum(parts) / np.log(ends)
    return LogAverageResult(float(running[-1]), float(T), tuple(ends.tolist()), tuple(running.tolist()))


def log_average_power(N: PiecewisePath, alpha: float, T: float) -> LogAverageResult:
    """Exact ``(1/log T) int_1^T N(t) t^{-alpha-1} dt`` (normalizer ``t^alpha``)."""
    if T <= 1:
        raise DomainError("T must exceed 1")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    return _with_blocks(lambda a, b: power_weighted_integral(N, a, b, -alpha - 1.0), T)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_X2, _GL_W2 = np.polynomial.legendre.leggauss(20)


def _gauss(fun, a, b, x, w):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    u = mid[:, None] + half[:, None] * x[None, :]
    return half * np.sum(fun(u) * w[None, :], axis=1)


def log_average_general(f: PiecewisePath, a_hat, T: float, rel_tol: float = 1e-12,
                        max_depth: int = 40) -> LogAverageResult:
    """``(1/log T) int_1^T f(t)/a_hat(t) dt/t`` by piecewise Gauss-Legendre
    quadrature in log-time, bisecting pieces until 10- and 20-point rules
    agree to ``rel_tol``.  A ``NormalizerTriple`` with a pure power
    normalizer is routed to the exact formula."""
    if T <= 1:
        raise DomainError("T must exceed 1")
    if isinstance(a_hat, NormalizerTriple):
        if a_hat.power is not None:
            return log_average_power(f, a_hat.power, T)
        a_hat = a_hat.a_hat
    if f.t_min > 1 or f.t_max < T:
        raise DomainError(f"path window {f.window} does not cover [1, {T}]")

    def piece_integral(lo, hi):
        bp = f.breakpoints
        inner = bp[(bp > lo) & (bp < hi)]
        ta, tb = np.concatenate(([lo], inner)), np.concatenate((inner, [hi]))
        a, b = np.log(ta), np.log(tb)
        if f.kind == STEP:
            va, slope = evaluate(f, ta), np.zeros_like(ta)
        else:
            va = evaluate(f, ta)
            slope = (evaluate(f, tb) - va) / (tb - ta)
        total = 0.0
        for _ in range(max_depth):
            def fun(u, va=va, slope=slope, ta=ta):
                t = np.exp(u)
                return (va[:, None] + slope[:, None] * (t - ta[:, None])) / a_hat(t)
            i1 = _gauss(fun, a, b, _GL_X, _GL_W)
            i2 = _gauss(fun, a, b, _GL_X2, _GL_W2)
            scale = max(abs(total) + np.sum(np.abs(i2)), 1e-300)
            ok = np.abs(i1 - i2) <= rel_tol * scale / max(a.size, 1) ** 0.5
            total += float(np.sum(i2[ok]))
            if ok.all():
                return total
            # bisect the pieces that failed
            bad = ~ok
            m = 0.5 * (a[bad] + b[bad])
            a, b = np.concatenate((a[bad], m)), np.concatenate((m, b[bad]))
            va = np.concatenate((va[bad], va[bad] + slope[bad] * (np.exp(m) - ta[bad])))
            ta = np.concatenate((ta[bad], np.exp(m)))
            slope = np.concatenate((slope[bad], slope[bad]))
        raise ToleranceError(f"relative tolerance {rel_tol} not reached on [{lo}, {hi}]")

    return _with_blocks(piece_integral, T)


def fit_log_trend(ends, values) -> tuple[float, float]:
    """Least-squares fit ``value = L + C / log t``; returns ``(L, C)``."""
    x = 1.0 / np.log(np.asarray(ends, dtype=float))
    C, L = np.polyfit(x, np.asarray(values, dtype=float), 1)
    return float(L), float(C)


# ----------------------------------------------------------------------
# Cesaro distances along the scaling flow
# ----------------------------------------------------------------------
def _log_grid(T: float, points_per_unit: float) -> np.ndarray:
    n = max(int(math.ceil(T * points_per_unit)), 1)
    return np.linspace(0.0, T, n + 1)


def _trapezoid_mean(t, y) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)) / (t[-1] - t[0]))


def cesaro_orbit_distance(zhat: PiecewisePath, g: PiecewisePath, alpha: float, T: float,
                          points_per_unit: float = 64.0) -> float:
    """``(1/T) int_0^T sup_{[0,1]} |tau_t zhat - tau_t g| dt`` for the scaling
    flow of index ``alpha``; the sup over ``[0, e^t]`` is exact, the outer
    integral is the trapezoid rule on a log-time grid."""
    t = _log_grid(T, points_per_unit)
    ends = np.exp(t)
    if ends[-1] > min(zhat.t_max, g.t_max) or max(zhat.t_min, g.t_min) > 0:
        raise DomainError(f"paths must cover [0, e^{T}]")
    d = running_sup_distance(zhat, g, 0.0, ends) * np.exp(-alpha * t)
    return _trapezoid_mean(t, d)


def cesaro_horocycle_check(zhat: PiecewisePath, r: float, alpha: float, T: float,
                           points_per_unit: float = 64.0, a_hat: Callable | None = None) -> float:
    """``(1/T) int_0^T |zhat(e^t) - (zhat(e^t + r) - zhat(r))| / a_hat(e^t) dt``.

    With the default ``a_hat(x) = x^alpha`` this compares ``tau_t zhat`` and
    ``tau_t`` of the increment-flowed path at 1; passing a normalizer gives
    the renewal-path version.
    """
    if r == 0:
        return 0.0
    t = _log_grid(T, points_per_unit)
    x = np.exp(t)
    if x[-1] + r > zhat.t_max or zhat.t_min > min(r, 1.0):
        raise DomainError("path does not cover [0, e^T + r]")
    diff = np.abs(evaluate(zhat, x) - (evaluate(zhat, x + r) - evaluate(zhat, r)))
    norm = np.exp(alpha * t) if a_hat is None else np.asarray(a_hat(x), dtype=float)
    return _trapezoid_mean(t, diff / norm)


# ----------------------------------------------------------------------
# moment convergence
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MomentRow:
    k: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    closed_form: float

    @property
    def z(self) -> float:
        return (self.lhs - self.rhs) / math.hypot(self.lhs_se, self.rhs_se)


def sample_partial_sums(law, k: int, n: int, rng, chunk: int = 1 << 23) -> np.ndarray:
    """``n`` independent copies of ``S_k``, drawn in memory-bounded chunks."""
    if isinstance(law, StableGaps):
        # exact stability: S_k = k^{1/alpha} Z(1) in law
        return k ** (1.0 / law.alpha) * np.asarray(sample_stable(law.spec, rng, n))
    out = np.empty(n)
    rows = max(1, chunk // k)
    for start in range(0, n, rows):
        m = min(rows, n - start)
        out[start:start + m] = np.asarray(law.sample(rng, (m, k))).sum(axis=1)
    return out


def moment_convergence(law, spec: StableSpec, k_list: Sequence[int], p: float,
                       n_samples: int, rng) -> list[MomentRow]:
    """Monte Carlo ``E[(a(k)/S_k)^p]`` against ``E[Z(1)^-p]`` for each ``k``."""
    from .renewal import normalizers

    a = normalizers(law).a
    rows = []
    for k in k_list:
        if p == 0:
            rows.append(MomentRow(k, 1.0, 0.0, 1.0, 0.0, 1.0))
            continue
        lhs = (float(a(float(k))) / sample_partial_sums(law, int(k), n_samples, rng)) ** p
        rhs = np.asarray(sample_stable(spec, rng, n_samples)) ** (-p)
        rows.append(MomentRow(int(k), float(lhs.mean()), float(lhs.std(ddof=1) / math.sqrt(n_samples)),
                              float(rhs.mean()), float(rhs.std(ddof=1) / math.sqrt(n_samples)),
                              spec.negative_moment(p)))
    return rows


# ----------------------------------------------------------------------
# ensembles
# ----------------------------------------------------------------------
def path_rng(master_seed: int, index: int) -> np.random.Generator:
    """Stream ``index`` of ``master_seed``; independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)))


@dataclass
class EnsembleResult:
    experiment: str
    alpha: float | None
    horizon: float | None
    target: float | None
    mean: float | None
    se: float | None
    z: float | None
    n_paths: int
    status: str = "ok"
    blocks: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, s: str) -> "EnsembleResult":
        return cls(**json.loads(s))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "alpha", "horizon", "path_id", "value"])
        for i, v in enumerate(self.values):
            w.writerow([self.experiment, _fmt(self.alpha), _fmt(self.horizon), i, _fmt(v)])
        if self.values:
            w.writerow([self.experiment, _fmt(self.alpha), _fmt(self.horizon), "mean", _fmt(self.mean)])
        return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x)) if not isinstance(x, str) else x


def summarize(values, target=None, experiment: str = "", alpha=None, horizon=None,
              blocks=None, status: str = "ok") -> EnsembleResult:
    vals = [float(v) for v in values]
    n = len(vals)
    mean = float(np.mean(vals)) if n else None
    se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else None
    z = None
    if target is not None and mean is not None and se:
        z = (mean - target) / se
    elif target is not None and mean is not None and se == 0.0:
        z = 0.0 if mean == target else math.copysign(math.inf, mean - target)
    return EnsembleResult(experiment, alpha, horizon, target, mean, se, z, n, status,
                          list(blocks or []), vals)


def _call(args):
    fn, seed, i = args
    return i, fn(path_rng(seed, i))


def _split(out):
    if isinstance(out, tuple):
        return float(out[0]), [float(b) for b in out[1]]
    return float(out), None


def run_ensemble(experiment_fn: Callable, n_paths: int, master_seed: int, workers: int = 1,
                 target: float | None = None, experiment: str = "", alpha=None, horizon=None,
                 checkpoint: str | Path | None = None) -> EnsembleResult:
    """Run ``experiment_fn(rng)`` for path indices ``0..n_paths-1``.

    ``experiment_fn`` returns a value or ``(value, blocks)``; blocks are
    averaged over paths.  Results are ordered by index, so they do not depend
    on ``workers``.  With ``checkpoint`` each finished path is appended as a
    JSON line and paths already present are not recomputed.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    done: dict[int, object] = {}
    if checkpoint is not None and Path(checkpoint).exists():
        for line in Path(checkpoint).read_text().splitlines():
            if line.strip():
                rec = json.loads(line)
                done[int(rec["path_id"])] = rec["out"]
    todo = [i for i in range(n_paths) if i not in done]
    sink = open(checkpoint, "a") if checkpoint is not None else None
    try:
        def record(i, out):
            done[i] = out
            if sink is not None:
                o = list(out) if isinstance(out, tuple) else out
                if isinstance(o, list):
                    o = [float(o[0]), [float(b) for b in o[1]]]
                sink.write(json.dumps({"path_id": i, "out": o}) + "\n")
                sink.flush()

        if workers <= 1 or len(todo) <= 1:
            for i in todo:
                record(i, experiment_fn(path_rng(master_seed, i)))
        else:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                for i, out in ex.map(_call, [(experiment_fn, master_seed, i) for i in todo]):
                    record(i, out)
    finally:
        if sink is not None:
            sink.close()
    values, blocks = [], []
    for i in range(n_paths):
        out = done[i]
        if isinstance(out, list):
            out = (out[0], out[1])
        v, b = _split(out)
        values.append(v)
        if b is not None:
            blocks.append(b)
    mean_blocks = np.mean(blocks, axis=0).tolist() if blocks else []
    return summarize(values, target, experiment, alpha, horizon, mean_blocks)
