import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from ergoflow.paths import DomainError, evaluate, generalized_inverse, linear_path, sup_distance
from ergoflow.stable_ml import (StableSpec, constants, geometric_grid, integral_negative_moment,
                                mittag_leffler_path, sample_ml, sample_stable, simulate_ml_path,
                                simulate_subordinator)

ALPHAS = np.round(np.arange(0.05, 0.951, 0.05), 2)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_constant_identities(alpha):
    t = constants(alpha)
    assert abs(t.c - 1 / (math.gamma(1 - alpha) * math.gamma(1 + alpha))) < 1e-12
    assert abs(t.c_alpha - t.c_hat / t.c_tilde) < 1e-12
    assert abs(t.c_hat * t.c_check - 1) < 1e-15


def test_constants_half():
    t = constants(0.5)
    assert abs(t.c - 2 / math.pi) < 1e-15
    assert abs(t.c_tilde - 0.5) < 1e-15


def test_spec_domain():
    with pytest.raises(DomainError):
        StableSpec(1.0, 1.0)
    with pytest.raises(DomainError):
        StableSpec(0.5, 0.0)
    with pytest.raises(DomainError):
        constants(1.2)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_laplace_transform(alpha, rng):
    spec = StableSpec.canonical(alpha)
    z = sample_stable(spec, rng, 10 ** 6)
    for w in (0.5, 1.0, 2.0):
        x = np.exp(-w * z)
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - spec.laplace(w)) < 4 * se


def test_laplace_unit_scale(rng):
    z = sample_stable(StableSpec.hawkes(0.5), rng, 10 ** 6)
    assert abs(np.exp(-z).mean() - math.exp(-1)) < 0.002


def test_scale_change_multiplies_draws():
    a = sample_stable(StableSpec(0.4, 1.0), np.random.default_rng(5), 100)
    b = sample_stable(StableSpec(0.4, 2.0 ** 0.4), np.random.default_rng(5), 100)
    assert np.allclose(b, 2 * a, rtol=1e-12)


def test_tail_constant(rng):
    spec = StableSpec.canonical(0.5)
    assert abs(spec.tail_constant() - 1) < 1e-15
    z = sample_stable(spec, rng, 10 ** 7)
    assert abs(np.mean(z > 1e4) * 1e4 ** 0.5 - 1) < 0.1


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("s", [0.3, 1.0, 2.5])
def test_negative_moment_closed_form(alpha, s):
    spec = StableSpec.canonical(alpha)
    assert abs(spec.negative_moment(s) / integral_negative_moment(spec, s) - 1) < 1e-8
    if s == alpha:
        assert abs(spec.negative_moment(s) - constants(alpha).c) < 1e-12


def test_canonical_ml_mean_is_c():
    for alpha in ALPHAS:
        spec = StableSpec.canonical(alpha)
        assert abs(spec.negative_moment(alpha) - constants(alpha).c) < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 0.9])
def test_sample_ml_mean(alpha, rng):
    x = sample_ml(StableSpec.canonical(alpha), rng, 10 ** 6)
    c = constants(alpha).c
    assert abs(x.mean() - c) < 3 * x.std() / 1e3
    assert abs(x.mean() / c - 1) < 0.02


def test_subordinator_paths(rng):
    spec = StableSpec.canonical(0.5)
    z = simulate_subordinator(spec, [0.0, 1.0], rng)
    assert z.values[0] == 0 and z.values[1] > 0
    z = simulate_subordinator(spec, [-2.0, -1.0, 0.0, 1.0, 3.0], rng)
    assert z.is_nondecreasing and evaluate(z, 0.0) == 0
    with pytest.raises(DomainError):
        simulate_subordinator(spec, [0.0, 0.0, 1.0], rng)
    with pytest.raises(DomainError):
        simulate_subordinator(spec, [1.0, 2.0], rng)


def test_subordinator_increments_exchangeable(rng):
    spec = StableSpec.canonical(0.5)
    # one long path of equal cells; odd against even cells
    z = simulate_subordinator(spec, np.arange(0, 2 * 10 ** 5 + 1) * 0.5, rng)
    inc = np.diff(z.values).reshape(-1, 2)
    assert ks_2samp(inc[:, 0], inc[:, 1]).statistic < 0.01


def test_geometric_grid():
    g = geometric_grid(1e-3, 1.0, 8)
    assert g[0] == 0 and abs(g[1] - 1e-3) < 1e-18 and g[-1] == 1.0
    assert np.allclose(np.diff(np.log(g[1:])), np.log(1e3) / (g.size - 2))


def test_ml_path_deterministic_inverse():
    t = np.linspace(0, 3, 301)
    z = linear_path(t, t ** 2)
    zh = mittag_leffler_path(z)
    assert sup_distance(zh, linear_path(t ** 2, t)) == 0
    x = np.linspace(0, 9, 50)
    assert np.max(np.abs(evaluate(zh, x) - np.sqrt(x))) < 0.01


def test_ml_path_of_step_subordinator_is_staircase(rng):
    z = simulate_subordinator(StableSpec.canonical(0.5), np.linspace(0, 1, 11), rng)
    zh = mittag_leffler_path(z, "step")
    assert zh == generalized_inverse(z) or sup_distance(zh, generalized_inverse(z)) == 0
    assert np.all(np.isin(zh.values, z.breakpoints))


def test_simulate_ml_path_window(rng):
    spec = StableSpec.canonical(0.5)
    zh = simulate_ml_path(spec, 1e-4, 10.0, rng)
    assert zh.t_min == 0 and zh.t_max >= 10.0 and zh.breakpoints[1] <= 1e-4
    assert zh.is_nondecreasing


def test_ml_path_mean_at_one(rng):
    spec = StableSpec.canonical(0.5)
    grid = np.concatenate(([0.0], np.geomspace(1e-6, 1e3, 600)))
    vals = []
    for _ in range(20000):
        z = simulate_subordinator(spec, grid, rng)
        vals.append(float(evaluate(mittag_leffler_path(z), 1.0)))
    vals = np.array(vals)
    assert abs(vals.mean() / constants(0.5).c - 1) < 0.02
