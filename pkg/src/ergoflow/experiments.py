"""Registry of named experiments: per-path functions, defaults and targets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from . import cocycle as cc
from . import shift_models as sm
from .estimators import (cesaro_horocycle_check, cesaro_orbit_distance,
                         log_average_power, sample_partial_sums)
from .fractal import gauge_psi, hausdorff_cover_estimate, order_two_density
from .renewal import (Geometric, ParetoContinuous, ParetoInteger, StableGaps, Table,
                      count_events, coupled_pair, normalizers, simulate_renewal)
from .stable_ml import (StableSpec, constants, sample_ml,
                        simulate_ml_path, simulate_subordinator)


@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    target_text: str
    defaults: dict
    build: Callable            # params -> per-path function rng -> value | (value, blocks)
    target: Callable           # params -> float
    check: str = "z"           # "z", "rel", "abs", "decreasing" or "magnitude"
    n_paths_key: str = "paths"
    extra: dict = field(default_factory=dict)


def parse_law(desc, alpha: float):
    """``"pareto"``, ``"pareto-integer"``, ``"stable"``, ``"geometric:0.5"``,
    ``"table:0.5,0.3,0.2"`` or a config dict."""
    if isinstance(desc, dict):
        from .renewal import gap_law_from_config
        d = dict(desc)
        d.setdefault("alpha", alpha)
        return gap_law_from_config(d)
    name, _, arg = str(desc).partition(":")
    if name in ("pareto", "pareto-continuous"):
        return ParetoContinuous(float(arg) if arg else alpha)
    if name in ("pareto-integer", "integer-pareto"):
        return ParetoInteger(float(arg) if arg else alpha)
    if name == "stable":
        return StableGaps(StableSpec.canonical(float(arg) if arg else alpha))
    if name == "geometric":
        return Geometric(float(arg) if arg else 0.5)
    if name == "table":
        return Table(tuple(float(v) for v in arg.split(",")))
    raise ValueError(f"unknown law {desc!r}")


def _c(p):
    return constants(p["alpha"]).c


# ----------------------------------------------------------------------
# per-path functions (module level so that worker processes can import them)
# ----------------------------------------------------------------------
def _constants_path(rng, alpha):
    t = constants(alpha)
    r1 = abs(t.c - 1.0 / (math.gamma(1 - alpha) * math.gamma(1 + alpha)))
    r2 = abs(t.c_alpha - t.c_hat / t.c_tilde)
    return max(r1, r2)


def _ml_mean_path(rng, alpha, n):
    return float(np.mean(sample_ml(StableSpec.canonical(alpha), rng, n)))


def _return_sequence_path(rng, law, n):
    return count_events(law, n, rng) / float(normalizers(law).a_hat(n))


def _logavg_renewal_path(rng, law, T):
    s = simulate_renewal(law, rng, T=T)
    r = log_average_power(s.path, law.alpha, T)
    return r.value, r.block_values


def _logavg_discrete_path(rng, law, k, state, form):
    x = sm.markov_orbit(law, k + 1, rng).markov_word()
    i, ii = sm.discrete_order_two(x, sm.state_indicator(state), k, normalizers(law).a_hat)
    return i if form == "i" else ii


CHECKPOINTS = (5.0, 10.0, 15.0, 20.0)


def _coupling_path(rng, alpha, T, substeps):
    cp = coupled_pair(StableSpec.canonical(alpha), rng, T=math.exp(T) + 1.0, substeps=substeps)
    marks = [c for c in CHECKPOINTS if c < T] + [T]
    vals = [cesaro_orbit_distance(cp.ml, cp.counting, alpha, m) for m in marks]
    return vals[-1], vals


def _horocycle_path(rng, alpha, T, r):
    z = simulate_ml_path(StableSpec.canonical(alpha), min(r, 1.0) * 1e-2, math.exp(T) + r + 1.0, rng)
    marks = [c for c in CHECKPOINTS if c < T] + [T]
    vals = [cesaro_horocycle_check(z, r, alpha, m) for m in marks]
    return vals[-1], vals


def _cocycle_path(rng, law, t):
    x = cc.renewal_orbit(law, rng, abs(t) + 1.0, stationary=True)
    mass = sm.total_mass(law).value
    return cc.counting_cocycle(x, t) * mass / t


def _hopf_path(rng, law, n, state):
    x = sm.markov_orbit(law, n, rng).markov_word()
    v = sm.visit_counts(x, [1, state])
    return v[state] / v[1]


def _isomorphism_path(rng, law, n):
    w = sm.markov_orbit(law, n + 1, rng)
    y = w.event_word()[:n]
    mism = int(np.count_nonzero(sm.tower_orbit_word(w, n) != y))
    mism += int(np.count_nonzero(sm.markov_to_event(w.markov_word()[:n]) != y))
    mism += int(np.count_nonzero(sm.increment_to_event(sm.event_to_increment(y)) != y))
    mism += int(np.count_nonzero(sm.event_to_increment(y)[:n + 1] != w.increment_word()[:n + 1]))
    return float(mism)


def _order2_path(rng, alpha, S):
    z = simulate_ml_path(StableSpec.canonical(alpha), math.exp(-S), 1.0, rng)
    return order_two_density(z, alpha, S)


def _moment_path(rng, law, k, p, n):
    a = float(normalizers(law).a(float(k)))
    return float(np.mean((a / sample_partial_sums(law, int(k), n, rng)) ** p))


def _cover_path(rng, alpha, delta, n_grid):
    z = simulate_subordinator(StableSpec.hawkes(alpha), np.linspace(0.0, 1.0, n_grid + 1), rng)
    return hausdorff_cover_estimate(z.values, lambda d: gauge_psi(d, alpha), delta, min_diameter=1e-12)


# ----------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------
def _law(p):
    return parse_law(p["law"], p["alpha"])


REGISTRY: dict[str, Experiment] = {}


def _register(e: Experiment):
    REGISTRY[e.name] = e


_register(Experiment(
    "constants", "closed-form constant identities (residual)", "0 (identities to 1e-12)",
    {"alpha": 0.5, "paths": 1},
    lambda p: partial(_constants_path, alpha=p["alpha"]),
    lambda p: 0.0, check="abs", extra={"tol": 1e-12}))
_register(Experiment(
    "ml-mean", "Mittag-Leffler mean E[Z^-alpha], batch means", "c = sin(πα)/(πα)",
    {"alpha": 0.5, "n_samples": 10**6, "paths": 100},
    lambda p: partial(_ml_mean_path, alpha=p["alpha"], n=max(1, int(p["n_samples"]) // int(p["paths"]))),
    _c))
_register(Experiment(
    "return-sequence", "E[N_n]/a_hat(n) for a renewal process", "c = sin(πα)/(πα)",
    {"alpha": 0.5, "law": "pareto", "horizon": 10**6, "paths": 500},
    lambda p: partial(_return_sequence_path, law=_law(p), n=float(p["horizon"])),
    _c))
_register(Experiment(
    "logavg-renewal", "order-two log average of N(t)/t^alpha", "c = sin(πα)/(πα)",
    {"alpha": 0.5, "law": "pareto", "horizon": 1e12, "paths": 100},
    lambda p: partial(_logavg_renewal_path, law=_law(p), T=float(p["horizon"])),
    _c))
_register(Experiment(
    "logavg-discrete", "discrete order-two average on the renewal shift",
    "c·π_state (π from the invariant vector)",
    {"alpha": 0.5, "law": "pareto-integer", "horizon": 10**6, "paths": 100, "state": 1, "form": "ii"},
    lambda p: partial(_logavg_discrete_path, law=_law(p), k=int(p["horizon"]),
                      state=int(p["state"]), form=str(p["form"])),
    lambda p: _c(p) * float(sm.invariant_vector(sm.GapPMF.from_law(_law(p), int(p["state"]) + 1))[int(p["state"]) - 1])))
_register(Experiment(
    "coupling-cesaro", "Cesaro sup-distance of the stable-gap coupling along the scaling flow",
    "0 (decreasing in log-time)",
    {"alpha": 0.5, "horizon": 20.0, "paths": 100, "substeps": 4},
    lambda p: partial(_coupling_path, alpha=p["alpha"], T=float(p["horizon"]), substeps=int(p["substeps"])),
    lambda p: 0.0, check="decreasing"))
_register(Experiment(
    "horocycle-decay", "Cesaro horocycle discrepancy of a Mittag-Leffler path",
    "0 (decreasing in log-time)",
    {"alpha": 0.5, "horizon": 20.0, "paths": 100, "r": 1.0},
    lambda p: partial(_horocycle_path, alpha=p["alpha"], T=float(p["horizon"]), r=float(p["r"])),
    lambda p: 0.0, check="decreasing"))
_register(Experiment(
    "cocycle-integrals", "flow average of the counting cocycle on the stationary renewal flow",
    "1 (counting cocycle integral)",
    {"alpha": 0.5, "law": "geometric:0.5", "horizon": 1.0, "paths": 2000},
    lambda p: partial(_cocycle_path, law=_law(p), t=float(p["horizon"])),
    lambda p: 1.0))
_register(Experiment(
    "hopf-ratio", "visit ratio state/1 on the renewal shift", "π_state (invariant vector)",
    {"alpha": 0.6, "law": "pareto-integer", "horizon": 10**7, "paths": 1, "state": 2},
    lambda p: partial(_hopf_path, law=_law(p), n=int(p["horizon"]), state=int(p["state"])),
    lambda p: float(sm.invariant_vector(sm.GapPMF.from_law(_law(p), int(p["state"]) + 1))[int(p["state"]) - 1]),
    check="rel", extra={"tol": 0.05}))
_register(Experiment(
    "shift-isomorphism", "coding mismatches between the four renewal models", "exact conjugacy",
    {"alpha": 0.5, "law": "pareto-integer", "horizon": 10**5, "paths": 1},
    lambda p: partial(_isomorphism_path, law=_law(p), n=int(p["horizon"])),
    lambda p: 0.0, check="abs", extra={"tol": 0.0}))
_register(Experiment(
    "order2-density", "order-two density of the Mittag-Leffler range at 0", "c = sin(πα)/(πα)",
    {"alpha": 0.5, "horizon": 10.0, "paths": 200},
    lambda p: partial(_order2_path, alpha=p["alpha"], S=float(p["horizon"])),
    _c))
_register(Experiment(
    "moment-convergence", "E[(a(k)/S_k)^p] against E[Z^-p]", "Γ(p/α)/(αΓ(p)λ^{p/α}), λ = Γ(1-α)",
    {"alpha": 0.5, "law": "pareto", "horizon": 10**5, "paths": 100, "n_samples": 10**5, "p": 1.0},
    lambda p: partial(_moment_path, law=_law(p), k=int(p["horizon"]), p=float(p["p"]),
                      n=max(1, int(p["n_samples"]) // int(p["paths"]))),
    lambda p: StableSpec.canonical(p["alpha"]).negative_moment(float(p["p"]))))
_register(Experiment(
    "cover-diagnostic", "greedy psi-cover value of a stable range at scale delta",
    "c̃ = α^α(1-α)^(1-α), within one order of magnitude",
    {"alpha": 0.5, "horizon": 2.0 ** -10, "paths": 10, "n_grid": 200000},
    lambda p: partial(_cover_path, alpha=p["alpha"], delta=float(p["horizon"]), n_grid=int(p["n_grid"])),
    lambda p: constants(p["alpha"]).c_tilde, check="magnitude"))


def experiment_names() -> list[str]:
    return list(REGISTRY)
