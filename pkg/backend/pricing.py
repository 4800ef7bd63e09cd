"""P*-semigroup, LRM strategy, representation kernels and strategy surfaces.

Two engines evaluate G*(t, y) = E* g(y S_{T-t}):

  - ``FOURIER_COS``: Fourier-cosine series of the law of X_{T-t} on a cumulant-based
    interval. Gradient and strategy reuse the same payoff coefficients with the symbols iu
    and φ*(u)[σ²iu + J(u)], J(u) = L(1+iu) - L(iu) - L(1) taken under the original ν.
  - ``MONTE_CARLO``: terminal draws of X_{T-t}, finite differences and jump integrals with
    common random numbers.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from exceptions import CosTruncationError, ModelError, PathBudgetExhausted, PreconditionViolated
from levy_core import characteristic_exponent, cumulants
from payoffs import PayoffKind
from quadrature import ChebyshevCache
from simulate import sample_terminal
from utils import (
    CHEBYSHEV_DEGREE,
    COS_JUMP_TAIL_TOLERANCE,
    COS_TAIL_TOLERANCE,
    COS_TERMS,
    COS_TERMS_MAX,
    COS_TRUNCATION,
    FD_ABSOLUTE_STEP,
    FD_RELATIVE_STEP,
    MATURITY_GUARD,
    MC_MAX_PATHS,
    MC_PATHS,
    SURFACE_PRICES,
    SURFACE_CHECKS,
    SURFACE_TIMES,
    SURFACE_WIDTH,
)

logger = logging.getLogger(__name__)

# payoff rows per COS matrix block
COS_CHUNK = 64
# trailing coefficients summed into the truncation bound
COS_TAIL_TERMS = 16
JUMP_WIDTH_MAX = 64.0
COMPENSATOR_NODES = 801
EXACT_KINDS = (PayoffKind.LINEAR, PayoffKind.CONSTANT, PayoffKind.LOG)


class Method(Enum):
    FOURIER_COS = "cos"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class PriceEstimate:
    value: object
    std_error: object = 0.0


@dataclass(frozen=True)
class StrategyValue:
    theta: object
    diffusion_part: object
    jump_part: object
    quadrature_error_bound: object = 0.0

    def to_dict(self):
        return {
            "theta": self.theta,
            "diffusion_part": self.diffusion_part,
            "jump_part": self.jump_part,
            "quadrature_error_bound": self.quadrature_error_bound,
        }


@dataclass(frozen=True, eq=False)
class _Expansion:
    a: float
    b: float
    u: np.ndarray
    weights: dict
    tail: float


def _needs_series(payoff):
    if payoff.kind is PayoffKind.COMBINATION:
        return any(_needs_series(p) for _, p in payoff.components)
    return payoff.kind not in EXACT_KINDS


def _shaped(values, like):
    values = np.asarray(values)
    return float(values[0]) if np.ndim(like) == 0 else values.reshape(np.shape(like))


def jump_width(nu, norm):
    """Half-width W with ∫_{|x|>W} |eˣ-1| ν(dx) below the jump tolerance"""
    if nu is None or nu.is_zero():
        return 0.0
    width = 0.25
    while width < JUMP_WIDTH_MAX:
        tail = nu.integrate(lambda z: abs(math.expm1(z)), width, np.inf) + nu.integrate(
            lambda z: abs(math.expm1(z)), -np.inf, -width
        )
        if tail <= COS_JUMP_TAIL_TOLERANCE * max(norm, 1.0):
            break
        width *= 2.0
    return width


class SemigroupEvaluator:
    """
    Evaluator of G*(t, y) = E* g(y S_{T-t}) under a (starred) triplet.

    Params

      - ``starred_triplet``: characteristics of X under the pricing measure
      - ``payoff``: Payoff g
      - ``maturity``: T
      - ``method``: Method.FOURIER_COS or Method.MONTE_CARLO
      - ``terms`` / ``truncation``: minimal COS terms N and interval width L in cumulant units
      - ``paths`` / ``seed``: Monte Carlo draws per maturity and master seed
      - ``target_error``: Monte Carlo standard error to reach by doubling the draws
    """

    def __init__(
        self,
        starred_triplet,
        payoff,
        maturity,
        method=Method.FOURIER_COS,
        terms=COS_TERMS,
        truncation=COS_TRUNCATION,
        paths=MC_PATHS,
        seed=0,
        target_error=None,
    ):
        if not maturity > 0:
            raise ModelError("maturity must be positive")
        self.triplet = starred_triplet
        self.payoff = payoff
        self.maturity = float(maturity)
        self.method = Method(method)
        self.terms = int(terms)
        self.truncation = float(truncation)
        self.paths = int(paths)
        self.seed = int(seed)
        self.target_error = target_error
        self.mean, self.variance, self.fourth = cumulants(starred_triplet)
        nu = starred_triplet.nu
        if self.method is Method.FOURIER_COS and _needs_series(payoff):
            if not payoff.cos_available:
                raise ModelError("no Fourier-cosine coefficients for this payoff, use Monte Carlo")
            if starred_triplet.sigma == 0.0 and nu.finite_activity:
                raise ModelError("the law of X_t has an atom for σ = 0 and finite activity, use Monte Carlo")
        self._upper = math.pi * COS_TERMS_MAX / (2.0 * self.truncation * max(self._scale(self.maturity), 1e-12))
        self._psi = None
        if self.method is Method.FOURIER_COS and not nu.has_closed_form and not nu.is_zero():
            self._psi = ChebyshevCache(
                lambda u: characteristic_exponent(starred_triplet, u), self._upper, CHEBYSHEV_DEGREE
            )

    @property
    def sigma(self):
        return self.triplet.sigma

    def _scale(self, tau):
        return math.sqrt(self.variance * tau + math.sqrt(self.fourth * tau))

    def _tau(self, t):
        if not 0.0 <= t <= self.maturity:
            raise PreconditionViolated("t={} lies outside [0, {}]".format(t, self.maturity))
        return self.maturity - t

    def exponent(self, u):
        """ψ*(u) for real u"""
        if self._psi is not None:
            return self._psi(u)
        return characteristic_exponent(self.triplet, np.asarray(u, dtype=float))

    def characteristic_function(self, u, tau):
        return np.exp(-tau * self.exponent(u))

    def interval(self, tau, extra=0.0):
        width = self.truncation * self._scale(tau) + extra
        centre = self.mean * tau
        return centre - width, centre + width

    def growth_factor(self, tau):
        """E* e^{X_τ}, equal to one when S is a P*-martingale"""
        return float(np.exp(-tau * characteristic_exponent(self.triplet, -1j)).real)

    # Fourier-cosine engine

    @lru_cache(maxsize=16)
    def _jump_symbol(self, nu):
        l1 = complex(nu.laplace_exponent(1.0 + 0.0j))

        def symbol(u):
            u = np.asarray(u, dtype=float)
            return nu.laplace_exponent(1.0 + 1j * u) - nu.laplace_exponent(1j * u) - l1

        if nu.has_closed_form or nu.is_zero():
            return symbol
        return ChebyshevCache(symbol, self._upper, CHEBYSHEV_DEGREE)

    @lru_cache(maxsize=256)
    def _expansion(self, tau, nu=None, norm=1.0):
        a, b = self.interval(tau, jump_width(nu, norm))
        if self.sigma > 0:
            scale = self.sigma * math.sqrt(tau)
        else:
            scale = math.sqrt(self.variance * tau)
        n = int(np.clip(math.ceil(4.0 * (b - a) / max(scale, 1e-300)), self.terms, COS_TERMS_MAX))
        while True:
            u = np.arange(n) * math.pi / (b - a)
            phi = self.characteristic_function(u, tau)
            if abs(phi[-1]) <= COS_TAIL_TOLERANCE or n >= COS_TERMS_MAX:
                break
            n = min(2 * n, COS_TERMS_MAX)
        if abs(phi[-1]) > COS_TAIL_TOLERANCE:
            logger.warning("COS series capped at %d terms for tau=%.3g, |φ| = %.2e", n, tau, abs(phi[-1]))
        rotation = np.exp(-1j * u * a) * (2.0 / (b - a))

        def coefficients(symbol):
            out = (symbol * rotation).real
            out[0] *= 0.5
            return out

        density = coefficients(phi)
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        edge = max(abs(density.sum()), abs(density @ signs)) * (b - a)
        if edge > COS_TAIL_TOLERANCE:
            raise CosTruncationError(
                "density {:.2e} at the edge of [{:.4g}, {:.4g}] for tau={:.4g}".format(edge, a, b, tau)
            )
        weights = {"value": density, "dx": coefficients(1j * u * phi)}
        if nu is not None:
            weights["jump"] = coefficients(phi * self._jump_symbol(nu)(u))
        tail = float(np.abs(density[-COS_TAIL_TERMS:]).sum() * (b - a))
        return _Expansion(a, b, u, weights, tail)

    def _series(self, payoff, x, expansion, name):
        out = np.empty(len(x))
        for start in range(0, len(x), COS_CHUNK):
            block = x[start:start + COS_CHUNK]
            out[start:start + COS_CHUNK] = payoff.cos_coefficients(block, expansion.a, expansion.b, expansion.u) @ expansion.weights[name]
        return out

    @lru_cache(maxsize=16)
    def _log_jump_moment(self, nu):
        return nu.integrate(lambda z: z * math.expm1(z))

    def _resolve(self, payoff, tau, x, quantity, nu=None, norm=1.0):
        """value G, dx ∂_xG, diffusion σ²∂_xG or jump ∫(G(x+z)-G(x))(e^z-1)ν(dz) on log-prices x"""
        kind = payoff.kind
        if kind is PayoffKind.COMBINATION:
            return sum(w * self._resolve(p, tau, x, quantity, nu, norm) for w, p in payoff.components)
        if kind is PayoffKind.CONSTANT:
            return np.full(len(x), payoff.constant if quantity == "value" else 0.0)
        if kind is PayoffKind.LINEAR:
            y = np.exp(x) * self.growth_factor(tau)
            factor = {"value": 1.0, "dx": 1.0, "diffusion": self.sigma ** 2, "jump": norm - self.sigma ** 2}
            return y * factor[quantity]
        if kind is PayoffKind.LOG:
            if quantity == "value":
                return x + self.mean * tau
            if quantity == "jump":
                return np.full(len(x), self._log_jump_moment(nu))
            return np.full(len(x), 1.0 if quantity == "dx" else self.sigma ** 2)
        if quantity == "value" or quantity == "dx":
            return self._series(payoff, x, self._expansion(tau), quantity)
        expansion = self._expansion(tau, nu, norm)
        if quantity == "diffusion":
            return self.sigma ** 2 * self._series(payoff, x, expansion, "dx")
        return self._series(payoff, x, expansion, "jump")

    # Monte Carlo engine

    @lru_cache(maxsize=32)
    def _samples(self, tau, paths):
        bits = int(np.array([tau], dtype=np.float64).view(np.uint64)[0])
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, bits])))
        return sample_terminal(self.triplet, tau, paths, rng)

    def _mc_draws(self, tau, estimator):
        """Mean and standard error of estimator(X) with draws doubled until the target is met"""
        paths = self.paths
        while True:
            draws = estimator(self._samples(tau, paths))
            mean = float(np.mean(draws))
            se = float(np.std(draws, ddof=1) / math.sqrt(len(draws)))
            if self.target_error is None or se <= self.target_error:
                return mean, se
            if 2 * paths > MC_MAX_PATHS:
                raise PathBudgetExhausted(
                    "standard error {:.3e} above {:.3e} with {} paths".format(se, self.target_error, paths)
                )
            paths *= 2

    # Evaluations

    def _value(self, tau, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if tau == 0.0:
            return self.payoff(y), np.zeros(len(y))
        if self.method is Method.FOURIER_COS:
            return self._resolve(self.payoff, tau, np.log(y), "value"), np.zeros(len(y))
        pairs = [self._mc_draws(tau, lambda X, v=v: self.payoff(v * np.exp(X))) for v in y]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])

    def _gradient(self, tau, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.sigma == 0.0:
            return np.zeros(len(y)), np.zeros(len(y))
        if self.method is Method.FOURIER_COS:
            return self._resolve(self.payoff, tau, np.log(y), "dx") / y, np.zeros(len(y))
        pairs = []
        for v in y:
            h = max(FD_RELATIVE_STEP * v, FD_ABSOLUTE_STEP)

            def difference(X, v=v, h=h):
                grow = np.exp(X)
                return (self.payoff((v + h) * grow) - self.payoff((v - h) * grow)) / (2.0 * h)

            pairs.append(self._mc_draws(tau, difference))
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])

    def _check_integrable(self, nu):
        p = 2.0 * self.payoff.growth
        if p > 0 and not (nu.exp_moment_finite(p) and self.triplet.nu.exp_moment_finite(p)):
            raise PreconditionViolated("g(S_T) is not square integrable under both measures")

    def _strategy(self, coeffs, nu, tau, y, jump_method="fourier"):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x = np.log(y)
        norm = coeffs.norm_sigma_nu
        errors = np.zeros(len(y))
        if self.method is Method.FOURIER_COS:
            diffusion = self._resolve(self.payoff, tau, x, "diffusion", nu, norm) / y
            if jump_method == "quadrature":
                jumps = np.empty(len(y))
                for i, xi in enumerate(x):
                    base = self._resolve(self.payoff, tau, np.array([xi]), "value")[0]

                    def integrand(z, xi=xi, base=base):
                        shifted = self._resolve(self.payoff, tau, np.array([xi + z]), "value")[0]
                        return (shifted - base) * math.expm1(z)

                    jumps[i], errors[i] = nu.integrate(integrand, with_error=True)
                jumps /= y
                errors /= y
            else:
                jumps = self._resolve(self.payoff, tau, x, "jump", nu, norm) / y
                if _needs_series(self.payoff):
                    errors += self._expansion(tau, nu, norm).tail / y
        else:
            gradient, _ = self._gradient(tau, y)
            diffusion = self.sigma ** 2 * gradient
            jumps = np.empty(len(y))
            for i, v in enumerate(y):
                draws = self._samples(tau, self.paths)
                grow = np.exp(draws)
                base = float(np.mean(self.payoff(v * grow)))

                def integrand(z, v=v, base=base, grow=grow):
                    return (float(np.mean(self.payoff(v * math.exp(z) * grow))) - base) * math.expm1(z)

                jumps[i], errors[i] = nu.integrate(integrand, with_error=True)
            jumps /= y
            errors /= y
        return diffusion, jumps, errors

    def value(self, t, y):
        values, errors = self._value(self._tau(t), y)
        return PriceEstimate(_shaped(values, y), _shaped(errors, y))

    def gradient(self, t, y):
        tau = self._tau(t)
        if tau == 0.0:
            raise PreconditionViolated("∂_y G* is evaluated for t < T")
        values, errors = self._gradient(tau, y)
        return PriceEstimate(_shaped(values, y), _shaped(errors, y))

    def strategy(self, coeffs, nu, t, y, jump_method="fourier"):
        tau = self._tau(t)
        if tau == 0.0:
            raise PreconditionViolated("the strategy is evaluated for t < T")
        eta = self.payoff.holder_eta
        if (eta is None or eta < 1.0) and tau < MATURITY_GUARD * self.maturity:
            raise PreconditionViolated("t within {} T of maturity for a payoff with η < 1".format(MATURITY_GUARD))
        self._check_integrable(nu)
        diffusion, jumps, errors = self._strategy(coeffs, nu, tau, y, jump_method)
        theta = (diffusion + jumps) / coeffs.norm_sigma_nu
        return StrategyValue(_shaped(theta, y), _shaped(diffusion, y), _shaped(jumps, y), _shaped(errors, y))


def semigroup_value(ev, t, y):
    """G*(t, y), with its Monte Carlo standard error"""
    return ev.value(t, y)


def semigroup_gradient(ev, t, y):
    """∂_y G*(t, y), zero when σ = 0"""
    if ev.sigma == 0.0:
        return PriceEstimate(_shaped(np.zeros(np.size(y)), y), _shaped(np.zeros(np.size(y)), y))
    return ev.gradient(t, y)


def lrm_strategy(ev, coeffs, nu, t, y, jump_method="fourier"):
    """ϑ(t, y) = [σ²∂_yG*(t,y) + ∫(G*(t,eˣy) - G*(t,y))/y (eˣ-1) ν(dx)] / ‖(σ,ν)‖

    :raises PreconditionViolated: at or too close to maturity, or when g(S_T) is not in L₂
    """
    return ev.strategy(coeffs, nu, t, y, jump_method)


def strategy_table(ev, coeffs, nu, t_grid, y_grid):
    """Rows (t, y, theta, diffusion_part, jump_part) of the strategy surface"""
    rows = []
    y_grid = np.asarray(y_grid, dtype=float)
    for t in t_grid:
        value = ev.strategy(coeffs, nu, float(t), y_grid)
        rows.append(
            pd.DataFrame(
                {
                    "t": float(t),
                    "y": y_grid,
                    "theta": np.atleast_1d(value.theta),
                    "diffusion_part": np.atleast_1d(value.diffusion_part),
                    "jump_part": np.atleast_1d(value.jump_part),
                }
            )
        )
    return pd.concat(rows, ignore_index=True)


@dataclass(frozen=True, eq=False)
class PriceSurface:
    """
    Tabulated quantity on (log τ, log y), τ = T - t, linearly interpolated.

    Queries outside the table are clamped to its edge; τ below the first row reads that row.
    """

    quantity: str
    maturity: float
    log_tau: np.ndarray
    log_prices: np.ndarray
    values: np.ndarray
    interpolation_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self,
            "_interpolator",
            RegularGridInterpolator((self.log_tau, self.log_prices), self.values, method="linear"),
        )

    def __call__(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        lt = np.log(np.maximum(self.maturity - t, 1e-300))
        lx = np.log(s)
        clamped = (lx < self.log_prices[0]) | (lx > self.log_prices[-1])
        if np.any(clamped):
            logger.warning("%d %s queries clamped to the surface edge", int(np.count_nonzero(clamped)), self.quantity)
        lt = np.clip(lt, self.log_tau[0], self.log_tau[-1])
        lx = np.clip(lx, self.log_prices[0], self.log_prices[-1])
        out = self._interpolator(np.stack([lt.ravel(), lx.ravel()], axis=-1))
        return out.reshape(t.shape) if t.ndim else float(out[0])


def build_surface(
    ev,
    quantity,
    fn,
    times=SURFACE_TIMES,
    prices=SURFACE_PRICES,
    width=SURFACE_WIDTH,
    checks=SURFACE_CHECKS,
    seed=0,
    s0=1.0,
):
    """Tabulate fn(tau, x) on a geometric τ grid and ±width cumulant units of log-price,
    recording the largest interpolation error over random points"""
    maturity = ev.maturity
    taus = np.geomspace(MATURITY_GUARD * maturity, maturity, times)
    half = width * ev._scale(maturity)
    x = math.log(s0) + np.linspace(-half, half, prices)
    values = np.vstack([fn(tau, x) for tau in taus])
    surface = PriceSurface(quantity, maturity, np.log(taus), x, values)
    if checks:
        rng = np.random.default_rng(seed)
        check_tau = np.exp(rng.uniform(np.log(taus[0]), np.log(taus[-1]), checks))
        check_x = rng.uniform(x[0], x[-1], checks)
        direct = np.array([fn(tau, np.array([xi]))[0] for tau, xi in zip(check_tau, check_x)])
        interpolated = surface(maturity - check_tau, np.exp(check_x))
        error = float(np.max(np.abs(direct - interpolated)))
        logger.info("%s surface interpolation error %.3e over %d check points", quantity, error, checks)
        surface = PriceSurface(quantity, maturity, np.log(taus), x, values, error)
    return surface


def lrm_surface(ev, coeffs, nu, **kwargs):
    """ϑ(t, y) tabulated for path-wise hedging"""
    ev._check_integrable(nu)

    def theta(tau, x):
        diffusion, jumps, _ = ev._strategy(coeffs, nu, tau, np.exp(x))
        return (diffusion + jumps) / coeffs.norm_sigma_nu

    return build_surface(ev, "theta", theta, **kwargs)


def value_surface(ev, **kwargs):
    """F(t, x) = G*(t, eˣ)"""
    return build_surface(ev, "value", lambda tau, x: ev._value(tau, np.exp(x))[0], **kwargs)


def log_gradient_surface(ev, **kwargs):
    """∂_xF(t, x), the diffusion kernel per unit Brownian coefficient"""
    if ev.method is not Method.FOURIER_COS:
        raise ModelError("log-price gradient surfaces need the Fourier-cosine engine")
    return build_surface(ev, "dx", lambda tau, x: ev._resolve(ev.payoff, tau, x, "dx"), **kwargs)


def jump_compensator_surface(values, nu, delta=0.0, nodes=COMPENSATOR_NODES):
    """∫_{|z|>δ} (F(t, x+z) - F(t, x)) ν(dz) on the grid of a value surface

    Densities are integrated by the trapezoidal rule on [-W, W], atoms are summed.
    """
    sizes, masses = nu.atoms()
    sizes, masses = list(sizes), list(masses)
    if nu.has_density and not nu.is_zero():
        width = jump_width(nu, 1.0)
        z = np.linspace(-width, width, nodes)
        weights = np.full(nodes, z[1] - z[0])
        weights[[0, -1]] *= 0.5
        weights = weights * nu.density(z)
        sizes += list(z)
        masses += list(weights)
    sizes, masses = np.array(sizes, dtype=float), np.array(masses, dtype=float)
    keep = (np.abs(sizes) > delta) & (masses != 0.0)
    sizes, masses = sizes[keep], masses[keep]
    x = values.log_prices
    table = np.empty_like(values.values)
    for i, row in enumerate(values.values):
        shifted = np.interp(x[:, None] + sizes[None, :], x, row)
        table[i] = (shifted - row[:, None]) @ masses
    return PriceSurface("compensator", values.maturity, values.log_tau, x, table)


@dataclass(frozen=True)
class RepresentationKernels:
    value: float
    diffusion_kernel: float
    jump_kernel: Callable


def representation_kernels(triplet, payoff, maturity, t, x, method=Method.FOURIER_COS, **kwargs):
    """Kernels of f(X_T) = E f(X_T) + ∫σ∂_xF dW + ∫∫(F(t,X_{t-}+z) - F(t,X_{t-})) Ñ(dt,dz)
    with F(t, x) = E f(x + X_{T-t}) and ``payoff`` the function g = f∘log"""
    ev = SemigroupEvaluator(triplet, payoff, maturity, method, **kwargs)
    tau = ev._tau(t)
    if tau == 0.0:
        raise PreconditionViolated("kernels are evaluated for t < T")
    y = math.exp(x)
    value = float(ev._value(tau, y)[0][0])
    diffusion = float(triplet.sigma * y * ev._gradient(tau, y)[0][0])

    def jump_kernel(z):
        z = np.asarray(z, dtype=float)
        shifted = ev._value(tau, np.exp(x + np.atleast_1d(z)))[0]
        return _shaped(shifted - value, z)

    return RepresentationKernels(value, diffusion, jump_kernel)


class EnvelopeCase(Enum):
    BROWNIAN = "brownian"
    FINITE_VARIATION = "finite_variation"
    STABLE_LIKE = "stable_like"


def envelope_rate(case, tau, eta, alpha=None, beta=None):
    """R of the Γ-envelope at time to maturity τ"""
    tau = np.asarray(tau, dtype=float)
    case = EnvelopeCase(case)
    if case is EnvelopeCase.BROWNIAN:
        return tau ** ((eta - 1.0) / 2.0)
    if case is EnvelopeCase.FINITE_VARIATION:
        return np.ones_like(tau)
    if alpha is None or beta is None:
        raise ModelError("the stable-like envelope needs α and β")
    return tau ** ((eta + 1.0 - beta) / alpha)


@dataclass(frozen=True, eq=False)
class EnvelopeReport:
    sup_ratio: float
    times: np.ndarray
    profile: np.ndarray


def growth_envelope(strategy_values, times, big_theta, theta, maturity, rate=None):
    """sup |ϑ_t| (T-t)^{(1-θ)/2} / Θ(η)_t over paths, per time and overall

    :param strategy_values: ϑ on (path, time)
    :param big_theta: Θ(η) on the same (path, time) samples
    :param rate: optional R per time, dividing the ratio
    """
    values = np.abs(np.asarray(strategy_values, dtype=float))
    times = np.asarray(times, dtype=float)
    scale = (maturity - times) ** ((1.0 - theta) / 2.0)
    ratio = values * scale / np.asarray(big_theta, dtype=float)
    if rate is not None:
        ratio = ratio / np.asarray(rate, dtype=float)
    profile = np.max(ratio, axis=0)
    return EnvelopeReport(float(np.max(profile)) if profile.size else 0.0, times, profile)
