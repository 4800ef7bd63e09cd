import math

import numpy as np
import pytest
from scipy import stats

from exceptions import ModelError, PreconditionViolated
from levy_core import LevyTriplet, market_coefficients, minimal_martingale_measure
from measures import Zero
from payoffs import Payoff
from pricing import (
    EnvelopeCase,
    Method,
    SemigroupEvaluator,
    envelope_rate,
    growth_envelope,
    lrm_strategy,
    lrm_surface,
    representation_kernels,
    semigroup_gradient,
    semigroup_value,
    strategy_table,
)

T_POINTS = [0.0, 0.25, 0.5, 0.75, 0.9]
Y_POINTS = np.array([0.5, 0.8, 1.0, 1.25, 2.0])


def black_scholes_call(tau, y, sigma=0.2, strike=1.0):
    d1 = (np.log(y / strike) + 0.5 * sigma ** 2 * tau) / (sigma * math.sqrt(tau))
    d2 = d1 - sigma * math.sqrt(tau)
    return y * stats.norm.cdf(d1) - strike * stats.norm.cdf(d2), stats.norm.cdf(d1)


def evaluator(triplet, payoff, **kwargs):
    coeffs = market_coefficients(triplet)
    change = minimal_martingale_measure(triplet, coeffs)
    return SemigroupEvaluator(change.starred_triplet, payoff, 1.0, **kwargs), coeffs


@pytest.mark.parametrize("name", ["merton", "kou", "cgmy", "nig", "zero"])
def test_linear_payoff_is_replicated(model_zoo, name):
    triplet = model_zoo[name]
    ev, coeffs = evaluator(triplet, Payoff.linear())
    for t in T_POINTS:
        value = lrm_strategy(ev, coeffs, triplet.nu, t, Y_POINTS)
        np.testing.assert_allclose(value.theta, 1.0, atol=1e-8)


def test_constant_payoff_needs_no_hedge(merton):
    ev, coeffs = evaluator(merton, Payoff.constant_payoff(2.0))
    value = lrm_strategy(ev, coeffs, merton.nu, 0.5, Y_POINTS)
    np.testing.assert_array_equal(value.theta, 0.0)
    np.testing.assert_array_equal(semigroup_value(ev, 0.5, Y_POINTS).value, 2.0)


def test_linear_value_is_a_martingale(merton):
    ev, _ = evaluator(merton, Payoff.linear())
    np.testing.assert_allclose(semigroup_value(ev, 0.2, Y_POINTS).value, Y_POINTS, rtol=1e-12)


def test_black_scholes_price():
    ev, _ = evaluator(LevyTriplet(-0.02, 0.2, Zero()), Payoff.call(1.0))
    y = np.array([0.8, 1.0, 1.2])
    price, _ = black_scholes_call(0.5, y)
    np.testing.assert_allclose(semigroup_value(ev, 0.5, y).value, price, atol=1e-8)


def test_black_scholes_delta(black_scholes):
    ev, coeffs = evaluator(black_scholes, Payoff.call(1.0))
    y = np.linspace(0.6, 1.5, 10)
    for t in np.linspace(0.0, 0.9, 10):
        _, delta = black_scholes_call(1.0 - t, y)
        value = lrm_strategy(ev, coeffs, black_scholes.nu, float(t), y)
        np.testing.assert_allclose(value.theta, delta, atol=1e-4)
        np.testing.assert_array_equal(value.jump_part, 0.0)


def test_value_at_maturity_is_the_payoff(merton):
    ev, _ = evaluator(merton, Payoff.call(1.0))
    np.testing.assert_array_equal(semigroup_value(ev, 1.0, Y_POINTS).value, np.maximum(Y_POINTS - 1.0, 0.0))


def test_cos_agrees_with_monte_carlo(merton):
    ev, _ = evaluator(merton, Payoff.call(1.0))
    mc, _ = evaluator(merton, Payoff.call(1.0), method=Method.MONTE_CARLO, paths=100_000, seed=11)
    y = np.array([0.9, 1.0, 1.1])
    exact = semigroup_value(ev, 0.0, y).value
    estimate = semigroup_value(mc, 0.0, y)
    assert np.all(np.abs(estimate.value - exact) <= 4.0 * estimate.std_error)


def test_fourier_and_quadrature_jump_parts_agree(merton):
    ev, coeffs = evaluator(merton, Payoff.call(1.0))
    y = np.array([0.9, 1.1])
    fourier = lrm_strategy(ev, coeffs, merton.nu, 0.5, y)
    quadrature = lrm_strategy(ev, coeffs, merton.nu, 0.5, y, jump_method="quadrature")
    np.testing.assert_allclose(fourier.jump_part, quadrature.jump_part, atol=1e-6)
    np.testing.assert_allclose(fourier.diffusion_part, quadrature.diffusion_part, rtol=1e-12)


def test_strategy_is_linear_in_the_payoff(merton):
    call = Payoff.call(1.0)
    put = Payoff.put(1.0)
    combo = Payoff.combination([(1.0, call), (2.0, put)])
    parts = []
    for payoff in (call, put, combo):
        ev, coeffs = evaluator(merton, payoff)
        parts.append(lrm_strategy(ev, coeffs, merton.nu, 0.3, Y_POINTS).theta)
    np.testing.assert_allclose(parts[2], parts[0] + 2.0 * parts[1], atol=1e-8)


def test_pure_jump_models_have_no_diffusion_part(cgmy):
    ev, coeffs = evaluator(cgmy, Payoff.call(1.0))
    value = lrm_strategy(ev, coeffs, cgmy.nu, 0.5, Y_POINTS)
    np.testing.assert_array_equal(value.diffusion_part, 0.0)
    assert np.all((value.theta >= -1e-4) & (value.theta <= 1.0 + 1e-4))
    assert np.all(semigroup_gradient(ev, 0.5, Y_POINTS).value == 0.0)


def test_strategy_preconditions(merton):
    ev, coeffs = evaluator(merton, Payoff.binary(1.0))
    with pytest.raises(PreconditionViolated):
        lrm_strategy(ev, coeffs, merton.nu, 1.0, 1.0)
    with pytest.raises(PreconditionViolated):
        lrm_strategy(ev, coeffs, merton.nu, 1.0 - 1e-9, 1.0)
    with pytest.raises(PreconditionViolated):
        semigroup_gradient(ev, 1.0, 1.0)
    with pytest.raises(PreconditionViolated):
        semigroup_value(ev, 1.5, 1.0)


def test_custom_payoffs_need_monte_carlo(merton):
    custom = Payoff.custom(np.sqrt, holder_eta=0.5, growth=0.5)
    with pytest.raises(ModelError):
        evaluator(merton, custom)
    mc, _ = evaluator(merton, custom, method=Method.MONTE_CARLO, paths=20_000)
    assert semigroup_value(mc, 0.5, 1.0).value > 0.0


def test_strategy_table_layout(black_scholes):
    ev, coeffs = evaluator(black_scholes, Payoff.call(1.0))
    frame = strategy_table(ev, coeffs, black_scholes.nu, [0.0, 0.5], [0.9, 1.0, 1.1])
    assert list(frame.columns) == ["t", "y", "theta", "diffusion_part", "jump_part"]
    assert len(frame) == 6


def test_strategy_surface_interpolates_the_delta(black_scholes):
    ev, coeffs = evaluator(black_scholes, Payoff.call(1.0))
    surface = lrm_surface(ev, coeffs, black_scholes.nu, times=48, prices=256, checks=20)
    assert np.isfinite(surface.interpolation_error)
    _, delta = black_scholes_call(0.5, np.array([0.95, 1.05]))
    np.testing.assert_allclose(surface(0.5, np.array([0.95, 1.05])), delta, atol=1e-2)


def test_log_payoff_kernels(merton):
    kernels = representation_kernels(merton, Payoff.log(), 1.0, 0.25, 0.1)
    assert kernels.diffusion_kernel == pytest.approx(merton.sigma, abs=1e-12)
    z = np.array([-0.3, 0.2])
    np.testing.assert_allclose(kernels.jump_kernel(z), z, atol=1e-12)


def test_constant_payoff_kernels(merton):
    kernels = representation_kernels(merton, Payoff.constant_payoff(1.0), 1.0, 0.25, 0.0)
    assert kernels.value == 1.0
    assert kernels.diffusion_kernel == 0.0
    assert kernels.jump_kernel(0.4) == 0.0


def test_envelope_rates():
    tau = np.array([0.25, 1.0])
    np.testing.assert_allclose(envelope_rate(EnvelopeCase.BROWNIAN, tau, 0.0), [2.0, 1.0])
    np.testing.assert_allclose(envelope_rate("finite_variation", tau, 0.5), [1.0, 1.0])
    np.testing.assert_allclose(envelope_rate(EnvelopeCase.STABLE_LIKE, tau, 0.0, alpha=1.5, beta=1.0), [1.0, 1.0])
    with pytest.raises(ModelError):
        envelope_rate(EnvelopeCase.STABLE_LIKE, tau, 0.0)


def test_growth_envelope_of_constant_strategy():
    times = np.array([0.0, 0.5])
    report = growth_envelope(np.zeros((3, 2)), times, np.ones((3, 2)), 1.0, 1.0)
    assert report.sup_ratio == 0.0
    report = growth_envelope(np.full((3, 2), 2.0), times, np.ones((3, 2)), 1.0, 1.0)
    assert report.sup_ratio == 2.0
