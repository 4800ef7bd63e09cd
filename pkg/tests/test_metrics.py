import math

import numpy as np
import pytest
from scipy import integrate

from exceptions import DivergentExponentialMoment, InsufficientData, InsufficientPaths, ModelError
from levy_core import LevyTriplet, characteristic_exponent, minimal_martingale_measure
from metrics import (
    Direction,
    ErrorKind,
    StatePanel,
    Verdict,
    convergence_rate,
    fixed_epsilon_bound,
    lp_norm,
    reverse_holder_constant,
    sm_p_estimate,
    tail_decay,
    weight_regularity,
    weighted_bmo_bootstrap,
    weighted_bmo_estimate,
)
from measures import Kou

PATHS = 10_000
TIMES = np.linspace(0.0, 1.0, 33)


@pytest.fixture()
def flat_panel():
    ones = np.ones((PATHS, len(TIMES) - 1))
    return StatePanel(TIMES[:-1], ones, ones)


@pytest.fixture()
def brownian():
    rng = np.random.default_rng(21)
    steps = rng.standard_normal((PATHS, len(TIMES) - 1)) * math.sqrt(TIMES[1])
    return np.concatenate([np.zeros((PATHS, 1)), np.cumsum(steps, axis=1)], axis=1)


def test_lp_norm_examples():
    assert lp_norm(np.zeros(10), 2.0).value == 0.0
    assert lp_norm(np.array([1.0, -1.0]), 2.0).value == 1.0
    with pytest.raises(InsufficientData):
        lp_norm(np.array([1.0]), 2.0)
    with pytest.raises(ModelError):
        lp_norm(np.ones(5), 0.5)


def test_lp_norm_of_a_gaussian():
    samples = np.random.default_rng(1).standard_normal(100_000)
    estimate = lp_norm(samples, 4.0)
    assert abs(estimate.value - 3.0 ** 0.25) <= 4.0 * estimate.std_error
    assert lp_norm(samples, 2.0).value <= estimate.value


def test_bmo_of_vanishing_errors(flat_panel):
    zeros = np.zeros((PATHS, len(TIMES) - 1))
    value = weighted_bmo_estimate(zeros, np.zeros(PATHS), np.ones_like(zeros), flat_panel, 2.0, min_paths=PATHS)
    assert value == 0.0


def test_bmo_of_scaled_brownian_motion(flat_panel, brownian):
    c = 0.7
    left, terminal = c * brownian[:, :-1], c * brownian[:, -1]
    weights = np.ones_like(left)
    value = weighted_bmo_estimate(left, terminal, weights, flat_panel, 2.0, min_paths=PATHS)
    assert value == pytest.approx(c, rel=0.2)
    doubled = weighted_bmo_estimate(2.0 * left, 2.0 * terminal, weights, flat_panel, 2.0, min_paths=PATHS)
    assert doubled == pytest.approx(2.0 * value, rel=1e-12)
    coarse = weighted_bmo_estimate(left, terminal, weights, flat_panel, 2.0, time_grid=TIMES[:-1:4], min_paths=PATHS)
    assert coarse <= value
    heavier = weighted_bmo_estimate(left, terminal, 2.0 * weights, flat_panel, 2.0, min_paths=PATHS)
    assert heavier <= value


def test_bmo_bootstrap_error(flat_panel, brownian):
    left, terminal = 0.7 * brownian[:, :-1], 0.7 * brownian[:, -1]
    weights = np.ones_like(left)
    estimate = weighted_bmo_bootstrap(left, terminal, weights, flat_panel, 2.0, resamples=5, seed=3, min_paths=PATHS)
    assert estimate.value == weighted_bmo_estimate(left, terminal, weights, flat_panel, 2.0, min_paths=PATHS)
    assert 0.0 < estimate.std_error < 0.5 * estimate.value


def test_estimators_need_enough_paths(flat_panel):
    small = StatePanel(TIMES[:-1], np.ones((100, 32)), np.ones((100, 32)))
    with pytest.raises(InsufficientPaths):
        sm_p_estimate(np.ones((100, 32)), small, 2.0)
    with pytest.raises(InsufficientPaths):
        weighted_bmo_estimate(np.zeros((100, 32)), np.zeros(100), np.ones((100, 32)), small, 2.0)


def test_sm_of_flat_and_falling_weights(flat_panel):
    ones = np.ones((PATHS, len(TIMES) - 1))
    assert sm_p_estimate(ones, flat_panel, 3.0, min_paths=PATHS) == 1.0
    falling = np.tile(np.linspace(2.0, 1.0, len(TIMES) - 1), (PATHS, 1))
    assert sm_p_estimate(falling, flat_panel, 3.0, min_paths=PATHS) == pytest.approx(1.0)


def test_sm_of_a_rising_weight(flat_panel, brownian):
    phi = np.exp(0.2 * brownian[:, :-1])
    panel = StatePanel(TIMES[:-1], phi, np.ones_like(phi))
    value = sm_p_estimate(phi, panel, 3.0, min_paths=PATHS)
    assert value > 1.0
    assert sm_p_estimate(phi, panel, 3.0, time_grid=TIMES[:-1:4], min_paths=PATHS) <= value


def test_reverse_holder_without_measure_change(black_scholes):
    change = minimal_martingale_measure(black_scholes)
    for direction in Direction:
        assert reverse_holder_constant(change.v_triplet, 3.0, 1.0, direction) == 1.0


def test_reverse_holder_of_a_deterministic_density():
    assert reverse_holder_constant(LevyTriplet(0.3, 0.0), 3.0, 2.0) == pytest.approx(math.exp(0.6))
    with pytest.raises(ModelError):
        reverse_holder_constant(LevyTriplet(0.3, 0.0), 1.0, 2.0)


def test_reverse_holder_of_merton_matches_quadrature(merton):
    change = minimal_martingale_measure(merton)
    a = change.weight_loading
    v = change.v_triplet
    assert merton.nu.exp_moment_finite(3.0)

    def ell(x):
        return math.log1p(-a * math.expm1(x))

    def integrand(x):
        jump = ell(x)
        small = jump if abs(jump) <= 1.0 else 0.0
        return (math.exp(3.0 * jump) - 1.0 - 3.0 * small) * float(merton.nu.density(x))

    kinks = [math.log1p((1.0 - math.exp(c)) / a) for c in (-1.0, 1.0) if (1.0 - math.exp(c)) / a > -1.0]
    edges = sorted(kinks + [0.0])
    jumps = sum(
        integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        for lo, hi in zip([-np.inf] + edges, edges + [np.inf])
    )
    psi = -(3.0 * v.gamma + 4.5 * v.sigma ** 2 + jumps)
    expected = math.exp(abs(psi) / 3.0)
    assert reverse_holder_constant(v, 3.0, 1.0) == pytest.approx(expected, rel=1e-6)
    assert characteristic_exponent(v, -3.0j) == pytest.approx(psi, rel=1e-6)


def test_reverse_holder_diverges_without_moments():
    nu = Kou(intensity=1.0, p=0.4, eta_up=2.5, eta_down=5.0)
    triplet = LevyTriplet(-0.2, 0.2, nu)
    change = minimal_martingale_measure(triplet)
    with pytest.raises(DivergentExponentialMoment):
        reverse_holder_constant(change.v_triplet, 3.0, 1.0)
    assert not weight_regularity(triplet, 0.0, 3.0).sufficient
    assert weight_regularity(triplet, 0.0, 2.0).sufficient


def test_fixed_epsilon_bound():
    assert fixed_epsilon_bound(0.1, 0.01, 1.0) == pytest.approx(0.1)
    assert fixed_epsilon_bound(0.01, 0.01, 2.0) == pytest.approx(10.0)


def exact_law(ns, exponent, c=0.3, samples=1000):
    return {n: np.full(samples, c * n ** exponent) for n in ns}


def test_rate_of_an_exact_law():
    report = convergence_rate(exact_law([8, 16, 32, 64], -0.5), 1.0)
    assert report.slope == pytest.approx(-0.5, abs=1e-9)
    assert report.verdict is Verdict.CONSISTENT
    assert report.to_dict()["verdict"] == "Consistent"


def test_rate_of_a_wrong_law():
    report = convergence_rate(exact_law([8, 16, 32, 64], -1.0 / 3.0), 1.0)
    assert report.verdict is Verdict.INCONSISTENT


def test_rate_of_vanishing_errors():
    report = convergence_rate(exact_law([8, 16, 32, 64], 0.0, c=0.0), 1.0)
    assert report.verdict is Verdict.INCONCLUSIVE
    assert math.isnan(report.slope)


def test_rate_needs_four_net_sizes_and_enough_samples():
    with pytest.raises(InsufficientData):
        convergence_rate(exact_law([8, 16, 32], -0.5), 1.0)
    with pytest.raises(InsufficientData):
        convergence_rate(exact_law([8, 16, 32, 64], -0.5, samples=10), 1.0)


def test_rate_drops_the_first_of_six_points():
    runs = exact_law([8, 16, 32, 64, 128, 256], -0.5)
    runs[8] = runs[8] * 10.0
    report = convergence_rate(runs, 1.0)
    assert len(report.points) == 6
    assert report.verdict is Verdict.CONSISTENT


def test_rate_from_bmo_estimates():
    runs = {n: (0.3 * n ** -0.3125, 0.001) for n in (16, 32, 64, 128)}
    report = convergence_rate(runs, 1.6, ErrorKind.BMO)
    assert report.error_kind == "bmo"
    assert report.slope == pytest.approx(-0.3125, abs=1e-9)
    assert report.verdict is Verdict.CONSISTENT


def test_bmo_rate_needs_standard_errors():
    with pytest.raises(InsufficientData):
        convergence_rate({n: 0.3 * n ** -0.31 for n in (16, 32, 64, 128)}, 1.6, ErrorKind.BMO)


def test_tail_of_a_pareto_sample():
    samples = np.random.default_rng(2).pareto(3.0, 1_000_000) + 1.0
    decay = tail_decay(samples)
    assert decay.exponent == pytest.approx(3.0, abs=0.3)
    assert not decay.super_polynomial


def test_tail_of_a_gaussian_sample():
    decay = tail_decay(np.random.default_rng(2).standard_normal(100_000))
    assert decay.super_polynomial


def test_tail_needs_data():
    with pytest.raises(InsufficientData):
        tail_decay(np.zeros(100_000))
    with pytest.raises(InsufficientData):
        tail_decay(np.ones(10))
