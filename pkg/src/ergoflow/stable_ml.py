"""One-sided stable laws, stable subordinators and Mittag-Leffler paths."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .paths import LINEAR, STEP, DomainError, PiecewisePath, generalized_inverse


@dataclass(frozen=True)
class StableSpec:
    """Positive stable law with ``E exp(-w Z(1)) = exp(-laplace_scale * w**alpha)``."""

    alpha: float
    laplace_scale: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.laplace_scale > 0.0:
            raise DomainError("laplace_scale must be positive")

    @classmethod
    def canonical(cls, alpha: float) -> "StableSpec":
        """Scale ``Gamma(1 - alpha)``: tail ``P(Z > x) ~ x^-alpha`` and ``E[Z^-alpha] = c``."""
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        return cls(alpha, math.gamma(1.0 - alpha))

    @classmethod
    def hawkes(cls, alpha: float) -> "StableSpec":
        """Unit Laplace scale, ``E exp(-w Z(1)) = exp(-w**alpha)``."""
        return cls(alpha, 1.0)

    @classmethod
    def feller(cls, alpha: float) -> "StableSpec":
        """Scale ``Gamma(3 - alpha) / (alpha (1 - alpha))`` of the G_alpha law."""
        return cls(alpha, math.gamma(3.0 - alpha) / (alpha * (1.0 - alpha)))

    def laplace(self, w):
        return np.exp(-self.laplace_scale * np.power(w, self.alpha))

    def negative_moment(self, s: float) -> float:
        """Closed form of ``E[Z(1)^-s]`` for ``s > 0``."""
        if s == 0:
            return 1.0
        a, lam = self.alpha, self.laplace_scale
        return math.gamma(s / a) / (a * math.gamma(s) * lam ** (s / a))

    def tail_constant(self) -> float:
        """``lim x^alpha P(Z(1) > x) = laplace_scale / Gamma(1 - alpha)``."""
        return self.laplace_scale / math.gamma(1.0 - self.alpha)


@dataclass(frozen=True)
class ConstantTable:
    alpha: float
    c: float
    c_alpha: float
    c_check: float
    c_hat: float
    c_tilde: float

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "c": self.c, "c_alpha": self.c_alpha,
                "c_check": self.c_check, "c_hat": self.c_hat, "c_tilde": self.c_tilde}


def constants(alpha: float) -> ConstantTable:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    c = math.sin(math.pi * alpha) / (math.pi * alpha)
    c_check = math.gamma(3.0 - alpha) / (alpha * (1.0 - alpha))
    return ConstantTable(
        alpha=alpha,
        c=c,
        c_alpha=alpha ** (1.0 - alpha) * (1.0 - alpha) ** alpha / math.gamma(3.0 - alpha),
        c_check=c_check,
        c_hat=1.0 / c_check,
        c_tilde=alpha ** alpha * (1.0 - alpha) ** (1.0 - alpha),
    )


def kanter_transform(alpha: float, u, e):
    """Standard positive stable variate (unit Laplace scale) from
    ``u ~ U(0, pi)`` and ``e ~ Exp(1)`` via Kanter's representation."""
    u = np.asarray(u, dtype=float)
    e = np.asarray(e, dtype=float)
    a = alpha
    # Zolotarev's function A(u)^{1/(1-a)} split to keep the powers tame
    num = np.sin(a * u) ** (a / (1.0 - a)) * np.sin((1.0 - a) * u)
    den = np.sin(u) ** (1.0 / (1.0 - a))
    return (num / (den * e)) ** ((1.0 - a) / a)


def sample_stable(spec: StableSpec, rng: np.random.Generator, size=None):
    """Draw ``Z(1)``.  Multiplying ``laplace_scale`` by ``s**alpha`` multiplies
    every draw by ``s`` when the same generator state is used."""
    u = math.pi * (1.0 - rng.random(size))  # (0, pi]
    e = rng.standard_exponential(size)
    z = spec.laplace_scale ** (1.0 / spec.alpha) * kanter_transform(spec.alpha, u, e)
    return float(z) if size is None else z


def sample_ml(spec: StableSpec, rng: np.random.Generator, size=None):
    """Mittag-Leffler variate ``Z(1)^-alpha`` (the law of ``Z^(1)``)."""
    z = sample_stable(spec, rng, size)
    return z ** (-spec.alpha)


def geometric_grid(t_lo: float, t_hi: float, points_per_unit: float = 64.0) -> np.ndarray:
    """``0`` followed by a geometric grid from ``t_lo`` to ``t_hi``
    with ``points_per_unit`` points per unit of log-time."""
    if not 0 < t_lo < t_hi:
        raise DomainError("geometric grid needs 0 < t_lo < t_hi")
    n = max(int(math.ceil(math.log(t_hi / t_lo) * points_per_unit)), 1)
    return np.concatenate(([0.0], np.geomspace(t_lo, t_hi, n + 1)))


def simulate_subordinator(spec: StableSpec, grid, rng: np.random.Generator) -> PiecewisePath:
    """Exact finite-dimensional simulation of ``Z`` at the grid points.

    The grid must be strictly increasing and contain 0; the output is a
    nondecreasing step path with ``Z(0) = 0``.  A grid extending to negative
    times yields the two-sided process (increments to the left are drawn
    independently and accumulated leftwards).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise DomainError("grid must be strictly increasing with at least two points")
    zero = np.flatnonzero(grid == 0.0)
    if zero.size != 1:
        raise DomainError("grid must contain the time origin 0")
    k = int(zero[0])
    dt = np.diff(grid)
    inc = dt ** (1.0 / spec.alpha) * np.asarray(sample_stable(spec, rng, dt.size))
    values = np.empty(grid.size)
    values[k] = 0.0
    values[k + 1:] = np.cumsum(inc[k:])
    if k > 0:
        values[:k] = -np.cumsum(inc[:k][::-1])[::-1]
    return PiecewisePath(STEP, grid, values)


def mittag_leffler_path(z: PiecewisePath, kind: str = LINEAR) -> PiecewisePath:
    """Approximant of the Mittag-Leffler path ``Z^ = I(Z)``.

    ``kind="step"`` is the exact generalized inverse of the step path ``z``.
    ``kind="linear"`` interpolates the points ``(Z(u_k), u_k)``, which lie on
    the true inverse's graph at every grid time that is a point of right
    increase; repeated values (flat stretches of ``z``) keep their first time.
    """
    if kind == STEP:
        return generalized_inverse(z)
    if not z.is_nondecreasing:
        raise DomainError("mittag_leffler_path needs a nondecreasing path")
    v, t = z.values, z.breakpoints
    first = np.append(True, np.diff(v) > 0)
    return PiecewisePath(LINEAR, v[first], t[first])


def simulate_ml_path(spec: StableSpec, t_lo: float, t_hi: float, rng: np.random.Generator,
                     points_per_unit: float = 64.0, margin: float = 4.0,
                     max_tries: int = 20) -> PiecewisePath:
    """Linear Mittag-Leffler approximant resolved on ``[t_lo, t_hi]``.

    The subordinator is simulated on a geometric time grid whose ends are
    pushed out until ``Z(first grid time) <= t_lo`` and
    ``Z(last) >= t_hi``; the returned path covers ``[0, Z(last)]``.
    """
    a = spec.alpha
    lo = t_lo ** a * math.exp(-margin)
    hi = t_hi ** a * math.exp(margin)
    for _ in range(max_tries):
        z = simulate_subordinator(spec, geometric_grid(lo, hi, points_per_unit), rng)
        if z.values[1] <= t_lo and z.values[-1] >= t_hi:
            return mittag_leffler_path(z, LINEAR)
        if z.values[1] > t_lo:
            lo *= math.exp(-margin)
        if z.values[-1] < t_hi:
            hi *= math.exp(margin)
    raise DomainError("could not resolve the requested window; increase margin")


def integral_negative_moment(spec: StableSpec, s: float) -> float:
    """``E[Z^-s]`` from ``Gamma(s)^-1 int_0^inf w^{s-1} E exp(-wZ) dw`` by quadrature."""
    from scipy.integrate import quad

    # w = e^x turns the integrand into a smooth bump on the real line
    a, lam = spec.alpha, spec.laplace_scale
    peak = math.log(s / (a * lam)) / a
    f = lambda x: 0.0 if a * x > 700 else math.exp(s * x - lam * math.exp(a * x))
    head, _ = quad(f, -np.inf, peak, epsabs=0.0, epsrel=1e-12, limit=200)
    tail, _ = quad(f, peak, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return (head + tail) / gamma_fn(s)
