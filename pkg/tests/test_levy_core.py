import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from exceptions import (
    AssumptionViolated,
    ConfigError,
    DegenerateModel,
    DivergentExponentialMoment,
    NoApplicableCase,
    NonPositiveExponential,
    NotSquareIntegrable,
)
from levy_core import (
    BigJumpQuery,
    LevyTriplet,
    MeasureTag,
    SmallJumpQuery,
    Table1Case,
    characteristic_exponent,
    check_mmm_assumption,
    classify_small_jumps,
    cumulants,
    exp_to_stochastic_exp,
    jump_intensity_transfer,
    market_coefficients,
    minimal_martingale_measure,
    solve_gamma,
    stochastic_to_exp,
    symmetric_jump_condition,
    table1_parameters,
    triplet_from_dict,
)
from measures import CGMY, CompoundPoisson, Kou, Merton, Zero
from payoffs import Payoff
from simulate import sample_terminal


def test_black_scholes_coefficients():
    coeffs = market_coefficients(LevyTriplet(0.1, 0.2))
    assert coeffs.gamma_s == pytest.approx(0.12)
    assert coeffs.norm_sigma_nu == pytest.approx(0.04)
    assert coeffs.tradeoff_slope == pytest.approx(0.36)
    assert coeffs.tradeoff(2.0) == pytest.approx(0.72)


def test_characteristic_exponent_black_scholes():
    psi = characteristic_exponent(LevyTriplet(0.1, 0.2), 1.0)
    assert psi == pytest.approx(0.02 - 0.1j)


def test_characteristic_exponent_outside_the_strip():
    triplet = LevyTriplet(0.0, 0.2, Kou(intensity=1.0, p=0.4, eta_up=1.5, eta_down=5.0))
    with pytest.raises(DivergentExponentialMoment):
        characteristic_exponent(triplet, -2.0j)


def test_solve_gamma_hits_the_market_drift(merton, kou, cgmy, nig):
    for triplet in (merton, kou, cgmy, nig):
        assert market_coefficients(triplet).gamma_s == pytest.approx(-0.02, abs=1e-12)


def test_degenerate_and_heavy_tailed_models():
    with pytest.raises(DegenerateModel):
        market_coefficients(LevyTriplet(0.1, 0.0))
    with pytest.raises(NotSquareIntegrable):
        market_coefficients(LevyTriplet(0.0, 0.2, Kou(intensity=1.0, p=0.4, eta_up=1.5, eta_down=5.0)))


def test_cumulants_black_scholes():
    assert cumulants(LevyTriplet(0.1, 0.2)) == pytest.approx((0.1, 0.04, 0.0))


def test_stochastic_exponential_round_trip(merton):
    z = exp_to_stochastic_exp(merton)
    back = stochastic_to_exp(z)
    assert z.sigma == merton.sigma
    assert back.gamma == pytest.approx(merton.gamma, abs=1e-8)


def test_stochastic_exponential_of_large_negative_jumps():
    z = LevyTriplet(0.0, 0.1, CompoundPoisson(1.0, (-1.5,)))
    with pytest.raises(NonPositiveExponential):
        stochastic_to_exp(z)


def test_martingale_needs_no_change(black_scholes):
    change = minimal_martingale_measure(black_scholes)
    assert change.u_coefficient == 0.0
    assert change.starred_triplet.same_characteristics(black_scholes)
    assert change.starred_triplet.measure_tag is MeasureTag.MINIMAL


def test_assumption_fails_for_positive_drift_and_unbounded_jumps():
    nu = Merton(intensity=0.3, mu=-0.1, delta=0.15)
    triplet = LevyTriplet(solve_gamma(0.2, nu, 0.05), 0.2, nu)
    assert not check_mmm_assumption(triplet).holds
    with pytest.raises(AssumptionViolated):
        minimal_martingale_measure(triplet)


def test_assumption_holds_when_the_bound_is_only_approached(merton):
    coeffs = market_coefficients(merton)
    edge = replace(coeffs, gamma_s=-coeffs.norm_sigma_nu)
    check = check_mmm_assumption(merton, edge)
    assert check.margin == 0.0
    assert check.holds and check.via_sufficient
    atoms = LevyTriplet(0.0, 0.2, CompoundPoisson(0.5, (-0.5, 0.2), (0.6, 0.4)))
    atom_coeffs = market_coefficients(atoms)
    check = check_mmm_assumption(atoms, replace(atom_coeffs, gamma_s=-atom_coeffs.norm_sigma_nu))
    assert check.holds and check.margin < 0.0


@given(
    sigma=st.floats(0.05, 0.4),
    intensity=st.floats(0.1, 2.0),
    mu=st.floats(-0.3, 0.1),
    delta=st.floats(0.05, 0.3),
    share=st.floats(0.05, 0.9),
)
def test_starred_market_is_a_martingale(sigma, intensity, mu, delta, share):
    nu = Merton(intensity=intensity, mu=mu, delta=delta)
    triplet = LevyTriplet(solve_gamma(sigma, nu, -share * sigma ** 2), sigma, nu)
    change = minimal_martingale_measure(triplet)
    assert market_coefficients(change.starred_triplet).gamma_s == pytest.approx(0.0, abs=1e-7)
    check_points = np.linspace(-5.0, 5.0, 10_000)
    assert np.all(change.density_weight(check_points) > 0.0)


def test_starred_kou_is_a_martingale(kou):
    change = minimal_martingale_measure(kou)
    assert market_coefficients(change.starred_triplet).gamma_s == pytest.approx(0.0, abs=1e-7)


def test_starred_price_has_unit_mean(merton):
    starred = minimal_martingale_measure(merton).starred_triplet
    rng = np.random.default_rng(7)
    prices = np.exp(sample_terminal(starred, 1.0, 100_000, rng))
    se = prices.std(ddof=1) / math.sqrt(len(prices))
    assert abs(prices.mean() - 1.0) <= 4.0 * se


@pytest.mark.parametrize("index", [0.5, 1.0, 1.5])
def test_blumenthal_getoor_index_of_cgmy(index):
    small = classify_small_jumps(CGMY(C=0.1, G=5.0, M=5.0, Y=index))
    assert small.bg_index == pytest.approx(index, abs=0.1)
    assert small.s1_alpha == index


def test_finite_activity_has_index_zero():
    small = classify_small_jumps(Merton(intensity=0.3, mu=-0.1, delta=0.15))
    assert small.bg_index == 0.0
    assert small.first_moment_finite


def test_brownian_call_is_case_one(merton):
    choice = table1_parameters(merton.sigma, classify_small_jumps(merton.nu), Payoff.call(1.0))
    assert choice.case is Table1Case.C1
    assert (choice.r, choice.theta, choice.kappa) == (1.0, 1.0, 0.0)
    assert choice.predicted_slope == -0.5
    assert choice.epsilon(64) == pytest.approx(0.125)


def test_pure_jump_binary_is_case_three():
    small = classify_small_jumps(CGMY(C=0.1, G=5.0, M=5.0, Y=1.5))
    choice = table1_parameters(0.0, small, Payoff.binary(1.0))
    assert choice.case is Table1Case.C3
    assert 1.5 < choice.r <= 2.0
    assert 0.0 < choice.theta < 1.0 / 3.0


def test_brownian_binary_has_no_case(merton):
    with pytest.raises(NoApplicableCase):
        table1_parameters(merton.sigma, classify_small_jumps(merton.nu), Payoff.binary(1.0))


def test_jump_integrability_under_the_minimal_measure(merton):
    change = minimal_martingale_measure(merton)
    assert jump_intensity_transfer(merton.nu, change, SmallJumpQuery(0.5))
    assert jump_intensity_transfer(merton.nu, change, BigJumpQuery(3.0))


def test_symmetric_jump_condition_for_finite_variation():
    assert symmetric_jump_condition(CGMY(C=0.5, G=5.0, M=5.0, Y=0.5)).holds
    assert symmetric_jump_condition(Zero()).holds


def test_triplet_from_dict():
    spec = {"gamma_s": -0.02, "sigma": 0.2, "nu": {"family": "merton", "params": {"intensity": 0.3, "mu": -0.1, "delta": 0.15}}}
    triplet = triplet_from_dict(spec)
    assert market_coefficients(triplet).gamma_s == pytest.approx(-0.02, abs=1e-12)
    assert triplet_from_dict(triplet.to_dict()).same_characteristics(triplet)
    with pytest.raises(ConfigError):
        triplet_from_dict({"gamma": 0.0, "gamma_s": 0.0, "sigma": 0.2})
