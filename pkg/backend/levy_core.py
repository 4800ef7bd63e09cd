"""Lévy triplet algebra.

Characteristic exponents, conversions between a Lévy process and the driver of its
stochastic exponential, market coefficients of S = e^X, the minimal martingale measure,
small-jump classification and the choice of rate parameters (r, θ) for the hedging error.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from exceptions import (
    AssumptionViolated,
    ConfigError,
    DegenerateModel,
    DivergentExponentialMoment,
    IndeterminateIndex,
    ModelError,
    NoApplicableCase,
    NonPositiveExponential,
    NotSquareIntegrable,
)
from measures import LevyMeasure, TransformMap, Zero, measure_from_dict
from utils import BG_ANNULI, BG_TOLERANCE, MOMENT_ORDERS, TABLE1_SLACK

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)


class MeasureTag(Enum):
    ORIGINAL = "original"
    MINIMAL = "minimal"
    OTHER = "other"


@dataclass(frozen=True)
class LevyTriplet:
    """
    Characteristics (γ, σ, ν) of a Lévy process under a named measure, with the
    truncation function x·1{|x|<=1}.
    """

    gamma: float
    sigma: float
    nu: LevyMeasure = field(default_factory=Zero)
    measure_tag: MeasureTag = MeasureTag.ORIGINAL
    tag_name: Optional[str] = None

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ModelError("sigma must be nonnegative, got {}".format(self.sigma))
        if not math.isfinite(self.gamma):
            raise ModelError("gamma must be finite")

    def with_tag(self, tag, name=None):
        return LevyTriplet(self.gamma, self.sigma, self.nu, tag, name)

    def same_characteristics(self, other):
        return self.gamma == other.gamma and self.sigma == other.sigma and self.nu == other.nu

    def to_dict(self):
        tag = self.measure_tag.value if self.measure_tag is not MeasureTag.OTHER else self.tag_name or "other"
        return {"gamma": self.gamma, "sigma": self.sigma, "nu": self.nu.to_dict(), "measure_tag": tag}

    @classmethod
    def from_dict(cls, spec, field_name="model"):
        return triplet_from_dict(spec, field_name)


@dataclass(frozen=True)
class MarketCoefficients:
    gamma_s: float
    norm_sigma_nu: float
    tradeoff_slope: float
    exp_moment_flags: dict

    def tradeoff(self, t):
        """Mean-variance trade-off process, deterministic and linear in t"""
        return self.tradeoff_slope * t

    def to_dict(self):
        return {
            "gamma_s": self.gamma_s,
            "norm_sigma_nu": self.norm_sigma_nu,
            "tradeoff_slope": self.tradeoff_slope,
            "exp_moment_flags": {str(p): flag for p, flag in self.exp_moment_flags.items()},
        }


@dataclass(frozen=True)
class MMMCheck:
    holds: bool
    margin: float
    via_sufficient: bool


@dataclass(frozen=True)
class MeasureChange:
    """
    Minimal martingale measure dP* = 𝓔(U)_T dP.

    ``u_coefficient`` is the loading -γ_S/‖(σ,ν)‖ of U; ``brownian_shift`` is the drift c of
    W* = W + c·t; ``u_triplet`` and ``v_triplet`` characterize U and V = log 𝓔(U).
    """

    u_coefficient: float
    starred_triplet: LevyTriplet
    v_triplet: LevyTriplet
    u_triplet: LevyTriplet
    brownian_shift: float

    @property
    def weight_loading(self):
        """a in ν*(dx) = (1 - a(eˣ-1)) ν(dx)"""
        return -self.u_coefficient

    def density_weight(self, x):
        return 1.0 - self.weight_loading * np.expm1(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SmallJumpClass:
    bg_index: float
    s1_alpha: Optional[float]
    s2_alpha: Optional[float]
    first_moment_finite: bool


class Table1Case(Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"


@dataclass(frozen=True)
class Table1Choice:
    case: Table1Case
    r: float
    theta: float
    alpha: float
    eta: float

    @property
    def kappa(self):
        return 0.5 * (1.0 - self.theta)

    @property
    def predicted_slope(self):
        return -1.0 / (2.0 * self.r)

    def epsilon(self, n):
        return float(n) ** (-1.0 / (2.0 * self.r))


@dataclass(frozen=True)
class SmallJumpQuery:
    beta: float


@dataclass(frozen=True)
class BigJumpQuery:
    r: float


@dataclass(frozen=True)
class SymmetryCheck:
    holds: bool
    values: tuple


def characteristic_exponent(triplet, u):
    """ψ(u) with E e^{iuX_t} = e^{-tψ(u)}, extended to complex u inside the moment strip.

    :raises DivergentExponentialMoment: when Im(u) needs an exponential moment ν lacks
    """
    u = np.asarray(u, dtype=complex)
    for p in np.unique(-u.imag[u.imag != 0]):
        if not triplet.nu.exp_moment_finite(float(p)):
            raise DivergentExponentialMoment(float(p))
    psi = -1j * triplet.gamma * u + 0.5 * triplet.sigma ** 2 * u * u - triplet.nu.laplace_exponent(1j * u)
    return complex(psi) if psi.ndim == 0 else psi


def solve_gamma(sigma, nu, gamma_s):
    """Drift γ for which the market drift γ_S equals the target"""
    if not nu.exp_moment_finite(1.0):
        raise DivergentExponentialMoment(1.0)
    return float(gamma_s - 0.5 * sigma ** 2 - nu.laplace_exponent(1.0 + 0.0j).real)


def cumulants(triplet):
    """First, second and fourth cumulant of X_1"""
    nu = triplet.nu
    if nu.is_zero():
        return triplet.gamma, triplet.sigma ** 2, 0.0
    big = nu.integrate(lambda x: x, 1.0, np.inf) + nu.integrate(lambda x: x, -np.inf, np.nextafter(-1.0, -np.inf))
    second = nu.integrate(lambda x: x * x)
    fourth = nu.integrate(lambda x: x ** 4)
    return triplet.gamma + big, triplet.sigma ** 2 + second, fourth


def exp_to_stochastic_exp(triplet_x):
    """Triplet of Z with e^X = 𝓔(Z)"""
    nu = triplet_x.nu

    def correction(x):
        return (np.expm1(x) if x <= LOG2 else 0.0) - (x if abs(x) <= 1.0 else 0.0)

    gamma_z = triplet_x.gamma + 0.5 * triplet_x.sigma ** 2
    if not nu.is_zero():
        gamma_z += nu.integrate(correction, points=(LOG2,))
    return LevyTriplet(gamma_z, triplet_x.sigma, nu.image(TransformMap("expm1")), triplet_x.measure_tag, triplet_x.tag_name)


def stochastic_to_exp(triplet_z):
    """Triplet of Y with 𝓔(Z) = e^Y

    :raises NonPositiveExponential: when Z jumps by -1 or less
    """
    nu = triplet_z.nu
    sizes, _ = nu.atoms()
    hull = nu.support()
    if np.any(sizes <= -1.0) or (hull is not None and nu.has_density and hull[0] < -1.0):
        raise NonPositiveExponential("jumps of size <= -1 make the stochastic exponential nonpositive")

    def correction(z):
        y = math.log1p(z) if z > -1.0 else -math.inf
        return (y if abs(y) <= 1.0 else 0.0) - (z if abs(z) <= 1.0 else 0.0)

    gamma_y = triplet_z.gamma - 0.5 * triplet_z.sigma ** 2
    if not nu.is_zero():
        gamma_y += nu.integrate(correction, points=(math.e - 1.0, math.exp(-1.0) - 1.0))
    return LevyTriplet(gamma_y, triplet_z.sigma, nu.image(TransformMap("log1p")), triplet_z.measure_tag, triplet_z.tag_name)


def market_coefficients(triplet):
    """γ_S, ‖(σ,ν)‖ and the mean-variance trade-off slope of S = e^X

    :raises DegenerateModel: when σ = 0 and ν = 0
    :raises NotSquareIntegrable: when ∫_{|x|>1} e^{2x} ν(dx) = ∞
    """
    nu, sigma = triplet.nu, triplet.sigma
    if sigma == 0.0 and nu.is_zero():
        raise DegenerateModel("σ² + ν(ℝ) must be positive")
    if not nu.exp_moment_finite(2.0):
        raise NotSquareIntegrable("∫ e^{2x} ν(dx) over |x| > 1 is infinite")
    if nu.has_closed_form:
        l1 = float(nu.laplace_exponent(1.0 + 0.0j).real)
        jumps = float(nu.laplace_exponent(2.0 + 0.0j).real) - 2.0 * l1
    else:
        l1 = nu.integrate(lambda x: np.expm1(x) - (x if abs(x) <= 1.0 else 0.0))
        jumps = nu.integrate(lambda x: np.expm1(x) ** 2)
    gamma_s = triplet.gamma + 0.5 * sigma ** 2 + l1
    norm = sigma ** 2 + jumps
    if not norm > 0.0:
        raise DegenerateModel("‖(σ,ν)‖ = {} is not positive".format(norm))
    flags = {p: nu.exp_moment_finite(float(p)) for p in MOMENT_ORDERS}
    return MarketCoefficients(gamma_s, norm, gamma_s ** 2 / norm, flags)


def check_mmm_assumption(triplet, coeffs=None):
    """γ_S(eˣ-1) < ‖(σ,ν)‖ on the support of ν, decided at the binding support edge"""
    coeffs = coeffs or market_coefficients(triplet)
    gs, norm = coeffs.gamma_s, coeffs.norm_sigma_nu
    hull = triplet.nu.support()
    attained = True
    if hull is None or gs == 0.0:
        peak = -math.inf if hull is None else 0.0
    elif gs > 0:
        peak = gs * math.expm1(hull[1]) if math.isfinite(hull[1]) else math.inf
    else:
        # -γ_S is the limit as x -> -∞, never reached on an unbounded support
        attained = math.isfinite(hull[0])
        peak = gs * math.expm1(hull[0]) if attained else -gs
    margin = peak - norm
    holds = margin < 0 or (margin == 0 and not attained)
    return MMMCheck(holds=holds, margin=margin, via_sufficient=0.0 >= gs >= -norm)


def _level_points(a, levels):
    """x with -a(eˣ-1) equal to each level"""
    points = []
    for level in levels:
        arg = -level / a
        if arg > -1.0:
            points.append(math.log1p(arg))
    return tuple(points)


def minimal_martingale_measure(triplet, coeffs=None):
    """Starred triplet, U and V characteristics of the minimal martingale measure

    :raises AssumptionViolated: when the density 𝓔(U) would not stay positive
    """
    coeffs = coeffs or market_coefficients(triplet)
    check = check_mmm_assumption(triplet, coeffs)
    if not check.holds:
        raise AssumptionViolated(
            "γ_S(eˣ-1) reaches ‖(σ,ν)‖ on the support (margin {:.6g})".format(check.margin)
        )
    gs, norm = coeffs.gamma_s, coeffs.norm_sigma_nu
    nu, sigma = triplet.nu, triplet.sigma
    a = gs / norm
    if a == 0.0:
        zero = LevyTriplet(0.0, 0.0, Zero(), MeasureTag.OTHER, "U")
        return MeasureChange(
            u_coefficient=0.0,
            starred_triplet=triplet.with_tag(MeasureTag.MINIMAL),
            v_triplet=zero.with_tag(MeasureTag.OTHER, "V"),
            u_triplet=zero,
            brownian_shift=0.0,
        )

    linear = nu.integrate(lambda x: x * np.expm1(x) if abs(x) <= 1.0 else 0.0)
    starred = LevyTriplet(triplet.gamma - a * (sigma ** 2 + linear), sigma, nu.reweight(a), MeasureTag.MINIMAL)

    def alpha(x):
        return -a * math.expm1(x)

    sigma_u = abs(a) * sigma
    big_u = nu.integrate(lambda x: alpha(x) if abs(alpha(x)) > 1.0 else 0.0, points=_level_points(a, (-1.0, 1.0)))
    u_triplet = LevyTriplet(-big_u, sigma_u, nu.image(TransformMap("mmm_jump", a)), MeasureTag.OTHER, "U")

    def v_integrand(x):
        al = alpha(x)
        ell = math.log1p(al)
        return (ell if abs(ell) <= 1.0 else 0.0) - al

    v_points = _level_points(a, (math.e - 1.0, math.exp(-1.0) - 1.0))
    gamma_v = -0.5 * sigma_u ** 2 + nu.integrate(v_integrand, points=v_points)
    v_triplet = LevyTriplet(gamma_v, sigma_u, nu.image(TransformMap("mmm_log", a)), MeasureTag.OTHER, "V")
    logger.debug("minimal martingale measure: a=%.6g, gamma*=%.6g", a, starred.gamma)
    return MeasureChange(
        u_coefficient=-a,
        starred_triplet=starred,
        v_triplet=v_triplet,
        u_triplet=u_triplet,
        brownian_shift=gs * sigma / norm,
    )


def _annulus_slope(nu, r):
    """Mean log2-ratio of successive dyadic annulus integrals of |x|^r near 0"""
    increments = []
    for k in BG_ANNULI:
        outer, inner = 2.0 ** -k, 2.0 ** -(k + 1)
        value = nu.integrate(lambda x: abs(x) ** r, inner, outer) + nu.integrate(lambda x: abs(x) ** r, -outer, -inner)
        increments.append(value)
    increments = np.array(increments)
    if not np.all(np.isfinite(increments)) or np.any(increments <= 0):
        raise IndeterminateIndex("annulus integrals vanish or diverge at r={}".format(r))
    ratios = np.log2(increments[1:] / increments[:-1])
    return float(np.mean(ratios[len(ratios) // 2:]))


def classify_small_jumps(nu):
    """Blumenthal-Getoor index by bisection on the convergence of ∫|x|^r ν near 0,
    stable-like membership as declared by the family

    :raises IndeterminateIndex: when the annulus test does not separate convergence
    """
    s1, s2 = nu.s1_alpha, nu.s2_alpha
    if nu.is_zero() or nu.finite_activity:
        return SmallJumpClass(0.0, None, None, True)
    lo, hi = 0.0, 2.0
    if _annulus_slope(nu, hi) >= 0.0:
        raise IndeterminateIndex("|x|² is not integrable near 0 at the annulus resolution")
    if _annulus_slope(nu, lo) < 0.0:
        hi = lo
    while hi - lo > BG_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if _annulus_slope(nu, mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    index = 0.5 * (lo + hi)
    logger.debug("Blumenthal-Getoor index %.4f", index)
    return SmallJumpClass(index, s1, s2, nu.small_moment_finite(1.0))


def table1_parameters(sigma, small_jumps, payoff, slack=TABLE1_SLACK):
    """Table-1 case and concrete (r, θ) for a model/payoff pair

    Open ranges are entered by ``slack``; closed endpoints are returned exactly.

    :raises NoApplicableCase: when no case's hypotheses hold
    """
    eta = payoff.holder_eta
    if eta is None:
        raise NoApplicableCase("payoff has no Hölder exponent")
    if small_jumps.first_moment_finite:
        alpha_min = 1.0
    else:
        declared = small_jumps.s1_alpha if small_jumps.s1_alpha is not None else small_jumps.bg_index
        alpha_min = min(2.0, max(1.0, declared + slack))

    if sigma > 0.0:
        if 0.0 < eta <= 1.0:
            theta = 1.0 if eta == 1.0 else _inside(eta, slack)
            return Table1Choice(Table1Case.C1, alpha_min, theta, alpha_min, eta)
        raise NoApplicableCase("σ > 0 needs a Hölder exponent in (0, 1], got {}".format(eta))

    if alpha_min <= eta + 1.0:
        return Table1Choice(Table1Case.C2, alpha_min, 1.0, alpha_min, eta)
    if eta < 1.0:
        for case, alpha, extra in (
            (Table1Case.C3, small_jumps.s1_alpha, True),
            (Table1Case.C4, small_jumps.s2_alpha, payoff.in_sobolev(1.0 / (1.0 - eta))),
        ):
            if alpha is None or not extra or not 1.0 + eta <= alpha < 2.0:
                continue
            r = alpha + slack if alpha + slack <= 2.0 else 0.5 * (alpha + 2.0)
            theta = _inside(2.0 * (1.0 + eta) / alpha - 1.0, slack)
            return Table1Choice(case, r, theta, alpha, eta)
    raise NoApplicableCase(
        "σ=0, η={} and small-jump class {} match no case".format(eta, small_jumps)
    )


def _inside(upper, slack):
    """A point of (0, upper): upper - slack, or upper/2 when the slack does not fit"""
    return upper - slack if upper - slack > 0.0 else 0.5 * upper


def jump_intensity_transfer(nu, change, query):
    """Integrability of jumps under ν* answered from ν.

    Small jumps keep their β-integrability. For big jumps ∫ e^{(r-1)x} ν*(dx) < ∞ exactly
    when ∫ e^{rx} ν(dx) < ∞ on the upper tail, the lower tail keeping its order.
    """
    if nu.is_zero():
        return True
    if isinstance(query, SmallJumpQuery):
        return nu.small_moment_finite(query.beta)
    r = query.r
    if change.u_coefficient == 0.0:
        return nu.exp_moment_finite(r - 1.0)
    return nu.tail_finite(r, "right") and nu.tail_finite(r - 1.0, "left")


def symmetric_jump_condition(nu, levels=20):
    """sup over r in (0,1) of |∫_{|eˣ-1|>r} (eˣ-1) ν(dx)| < ∞, checked along r = 2^{-k}"""
    if nu.is_zero() or nu.finite_activity:
        return SymmetryCheck(True, ())
    values = []
    for k in range(1, levels + 1):
        r = 2.0 ** -k
        upper = nu.integrate(np.expm1, math.log1p(r), np.inf)
        lower = nu.integrate(np.expm1, -np.inf, math.log1p(-r))
        values.append(upper + lower)
    values = np.array(values)
    settled = abs(values[-1] - values[-5]) <= 0.05 * (1.0 + np.max(np.abs(values)))
    return SymmetryCheck(bool(np.all(np.isfinite(values)) and settled), tuple(values))


def triplet_from_dict(spec, field_name="model"):
    """Triplet from {gamma | gamma_s, sigma, nu: {family, params}, measure_tag}"""
    try:
        sigma = float(spec.get("sigma", 0.0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(field_name + ".sigma", "expected a number") from exc
    nu = measure_from_dict(spec.get("nu") or {"family": "zero"}, field_name + ".nu")
    tag_value = spec.get("measure_tag", "original")
    try:
        tag, name = MeasureTag(tag_value), None
    except ValueError:
        tag, name = MeasureTag.OTHER, str(tag_value)
    if "gamma" in spec and "gamma_s" in spec:
        raise ConfigError(field_name, "give either gamma or gamma_s, not both")
    try:
        if "gamma_s" in spec:
            gamma = solve_gamma(sigma, nu, float(spec["gamma_s"]))
        else:
            gamma = float(spec.get("gamma", 0.0))
        return LevyTriplet(gamma, sigma, nu, tag, name)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(field_name, str(exc)) from exc


def catalog_from_dict(document):
    """Named models of a catalog document {models: {name: model spec}}"""
    models = document.get("models")
    if not isinstance(models, dict) or not models:
        raise ConfigError("models", "expected a table of named models")
    return {name: triplet_from_dict(spec, "models." + name) for name, spec in models.items()}
