"""Error norms, weight regularity estimators and rate verification."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from exceptions import InsufficientData, InsufficientPaths, ModelError
from levy_core import characteristic_exponent
from utils import BMO_RESAMPLES, BOOTSTRAP_RESAMPLES, MIN_PATHS, MIN_RATE_SAMPLES, MIN_TAIL_SAMPLES, NEIGHBORS

logger = logging.getLogger(__name__)

RATE_TOLERANCE = 1e-9
RATE_TRANSIENT_POINTS = 6
MIN_RATE_POINTS = 4
ERROR_FLOOR = 1e-12


@dataclass(frozen=True)
class NormEstimate:
    value: float
    std_error: float


def _lp(samples, p):
    return float(np.mean(np.abs(samples) ** p) ** (1.0 / p))


def lp_norm(samples, p, resamples=BOOTSTRAP_RESAMPLES, seed=0):
    """Empirical L_p norm with a bootstrap standard error"""
    samples = np.asarray(samples, dtype=float).ravel()
    if len(samples) < 2:
        raise InsufficientData("an L_p norm needs at least 2 samples")
    if p < 1:
        raise ModelError("p must be at least 1")
    rng = np.random.default_rng(seed)
    boot = np.array([_lp(samples[rng.integers(0, len(samples), len(samples))], p) for _ in range(resamples)])
    return NormEstimate(_lp(samples, p), float(np.std(boot, ddof=1)) if resamples > 1 else 0.0)


@dataclass(frozen=True, eq=False)
class StatePanel:
    """
    Per-path Markov state sampled on a time grid.

    ``prices`` holds S_a and ``running`` Θ(η)_a, both of shape (paths, len(times)).
    """

    times: np.ndarray
    prices: np.ndarray
    running: np.ndarray

    @property
    def paths(self):
        return self.prices.shape[0]

    def columns(self, time_grid=None):
        if time_grid is None:
            return np.arange(len(self.times))
        idx = np.searchsorted(self.times, np.asarray(time_grid, dtype=float))
        idx = np.minimum(idx, len(self.times) - 1)
        if np.any(self.times[idx] != np.asarray(time_grid, dtype=float)):
            raise ModelError("time grid is not a subset of the panel times")
        return idx


def state_panel(weights, paths, times):
    """StatePanel of (S_a, Θ(η)_a) from WeightPath/SamplePath pairs"""
    times = np.asarray(times, dtype=float)
    prices, running = [], []
    for weight, path in zip(weights, paths):
        idx = np.clip(np.searchsorted(path.grid, times, side="right") - 1, 0, len(path.grid) - 1)
        prices.append(path.prices()[idx])
        running.append(weight.big_theta[idx])
    return StatePanel(times, np.array(prices), np.array(running))


def _conditional_mean(features, target, neighbors):
    """k-nearest-neighbour regression of target on standardized features, at every sample"""
    features = np.log(np.column_stack(features))
    spread = features.std(axis=0)
    keep = spread > 1e-12 * (1.0 + np.abs(features).max(axis=0))
    if not np.any(keep):
        return np.full(len(target), target.mean())
    z = (features[:, keep] - features[:, keep].mean(axis=0)) / spread[keep]
    k = min(neighbors, len(target))
    _, idx = cKDTree(z).query(z, k=k)
    idx = idx.reshape(len(target), k)
    return target[idx].mean(axis=1)


def _check_paths(panel, min_paths):
    if panel.paths < min_paths:
        raise InsufficientPaths("{} paths, at least {} are needed".format(panel.paths, min_paths))


def weighted_bmo_estimate(
    error_left, error_terminal, weights, panel, p, time_grid=None, neighbors=NEIGHBORS, min_paths=MIN_PATHS
):
    """Grid-restricted weighted BMO estimate

    max over grid times a and regression cells of E[|E_T - E_{a-}|^p | S_a, Θ_a] / Φ̄_a^p, to
    the power 1/p. Stopping times off the grid are not seen, so this is a lower bound.

    :param error_left: E_{a-} on the panel times, shape (paths, times)
    :param error_terminal: E_T per path
    :param weights: Φ̄_a on the panel times
    """
    _check_paths(panel, min_paths)
    error_left = np.asarray(error_left, dtype=float)
    error_terminal = np.asarray(error_terminal, dtype=float)
    weights = np.asarray(weights, dtype=float)
    best = 0.0
    for j in panel.columns(time_grid):
        target = np.abs(error_terminal - error_left[:, j]) ** p
        if not np.any(target):
            continue
        moments = _conditional_mean((panel.prices[:, j], panel.running[:, j]), target, neighbors)
        best = max(best, float(np.max(moments / weights[:, j] ** p)))
    return best ** (1.0 / p)


def weighted_bmo_bootstrap(
    error_left,
    error_terminal,
    weights,
    panel,
    p,
    time_grid=None,
    resamples=BMO_RESAMPLES,
    seed=0,
    neighbors=NEIGHBORS,
    min_paths=MIN_PATHS,
):
    """weighted_bmo_estimate with a standard error from resampling whole paths"""
    error_left = np.asarray(error_left, dtype=float)
    error_terminal = np.asarray(error_terminal, dtype=float)
    weights = np.asarray(weights, dtype=float)
    value = weighted_bmo_estimate(error_left, error_terminal, weights, panel, p, time_grid, neighbors, min_paths)
    if resamples < 2:
        raise ModelError("a bootstrap standard error needs at least 2 resamples")
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(resamples):
        pick = rng.integers(0, panel.paths, panel.paths)
        resampled = StatePanel(panel.times, panel.prices[pick], panel.running[pick])
        draws.append(
            weighted_bmo_estimate(
                error_left[pick], error_terminal[pick], weights[pick], resampled, p, time_grid, neighbors, min_paths
            )
        )
    return NormEstimate(value, float(np.std(draws, ddof=1)))


def sm_p_estimate(phi, panel, p, time_grid=None, neighbors=NEIGHBORS, min_paths=MIN_PATHS):
    """Grid-restricted SM_p estimate of a weight process

    max over grid times a of E[sup_{t>=a} Φ_t^p | S_a, Θ_a] / Φ_a^p, to the power 1/p; the
    sup runs over every panel time after a.
    """
    _check_paths(panel, min_paths)
    phi = np.asarray(phi, dtype=float)
    ahead = np.maximum.accumulate((phi ** p)[:, ::-1], axis=1)[:, ::-1]
    best = 1.0
    for j in panel.columns(time_grid):
        target = ahead[:, j] / phi[:, j] ** p
        moments = _conditional_mean((panel.prices[:, j], panel.running[:, j]), target, neighbors)
        best = max(best, float(np.max(moments)))
    return best ** (1.0 / p)


class Direction(Enum):
    PSTAR_OVER_P = "pstar_over_p"
    P_OVER_PSTAR = "p_over_pstar"


def reverse_holder_constant(v_triplet, s, maturity, direction=Direction.PSTAR_OVER_P):
    """exp(T|ψ_V(u)|/s) with u = -si for dP*/dP and u = (s-1)i for dP/dP*

    :raises DivergentExponentialMoment: when the needed moment of ν_V is infinite
    """
    if not s > 1.0:
        raise ModelError("reverse Hölder exponent must exceed 1")
    direction = Direction(direction)
    u = -s * 1j if direction is Direction.PSTAR_OVER_P else (s - 1.0) * 1j
    psi = characteristic_exponent(v_triplet, u)
    return math.exp(maturity * abs(psi) / s)


def fixed_epsilon_bound(epsilon, mesh, r):
    """max{ε^{1-r}√mesh, √mesh, ε}"""
    root = math.sqrt(mesh)
    return max(epsilon ** (1.0 - r) * root, root, epsilon)


@dataclass(frozen=True)
class WeightRegularity:
    eta: float
    q: float
    sufficient: bool


def weight_regularity(triplet, eta, q):
    """Sufficient condition ∫_{|x|>1} e^{qx} ν(dx) < ∞ for Φ(η) in SM_q"""
    return WeightRegularity(float(eta), float(q), bool(triplet.nu.exp_moment_finite(float(q))))


class ErrorKind(Enum):
    L2 = "l2"
    LP = "lp"
    BMO = "bmo"


class Verdict(Enum):
    CONSISTENT = "Consistent"
    INCONSISTENT = "Inconsistent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class RatePoint:
    n: int
    error: float
    std_error: float


@dataclass(frozen=True)
class RateReport:
    points: tuple
    slope: float
    slope_ci: tuple
    predicted_slope: float
    verdict: Verdict
    error_kind: str = "l2"
    fixed_epsilon_bounds: Optional[dict] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "points": [{"n": q.n, "error": q.error, "std_error": q.std_error} for q in self.points],
            "slope": self.slope,
            "ci": list(self.slope_ci),
            "predicted": self.predicted_slope,
            "verdict": self.verdict.value,
            "error_kind": self.error_kind,
        }
        if self.fixed_epsilon_bounds is not None:
            out["fixed_epsilon_bounds"] = {str(n): b for n, b in self.fixed_epsilon_bounds.items()}
        out.update(self.extras)
        return out


def _estimate(value):
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return float(value[0]), (float(value[1]) if len(value) > 1 else 0.0)


def _fit(ns, errors, std_errors):
    x, y = np.log(ns), np.log(errors)
    if np.all(std_errors > 0):
        w = errors / std_errors
    else:
        w = np.ones(len(x))
    return float(np.polyfit(x, y, 1, w=w)[0])


def convergence_rate(
    runs,
    predicted_r,
    error_kind=ErrorKind.L2,
    p=2.0,
    resamples=BOOTSTRAP_RESAMPLES,
    seed=0,
    min_samples=MIN_RATE_SAMPLES,
    fixed_epsilon_bounds=None,
):
    """Weighted log-log slope of the error against n with a bootstrap CI

    :param runs: n -> error samples, or n -> (estimate, std error) for ``ErrorKind.BMO``
    :raises InsufficientData: with fewer than 4 distinct n, too few samples per n, or BMO
        points without a positive standard error
    """
    error_kind = ErrorKind(error_kind)
    if error_kind is ErrorKind.L2:
        p = 2.0
    ns = sorted(int(n) for n in runs)
    if len(ns) < MIN_RATE_POINTS:
        raise InsufficientData("a rate needs at least {} net sizes, got {}".format(MIN_RATE_POINTS, len(ns)))
    predicted = -1.0 / (2.0 * predicted_r)
    rng = np.random.default_rng(seed)
    if error_kind is ErrorKind.BMO:
        points = [RatePoint(n, *_estimate(runs[n])) for n in ns]
        samples = None
    else:
        samples = {n: np.asarray(runs[n], dtype=float).ravel() for n in ns}
        short = [n for n in ns if len(samples[n]) < min_samples]
        if short:
            raise InsufficientData("net sizes {} have fewer than {} samples".format(short, min_samples))
        points = []
        for n in ns:
            norm = lp_norm(samples[n], p, resamples, seed)
            points.append(RatePoint(n, norm.value, norm.std_error))
    points = tuple(points)

    fitted = points[1:] if len(points) >= RATE_TRANSIENT_POINTS else points
    errors = np.array([q.error for q in fitted])
    if not np.all(np.isfinite(errors)) or np.any(errors <= ERROR_FLOOR):
        logger.info("errors vanish or are not finite, rate is inconclusive")
        return RateReport(points, math.nan, (math.nan, math.nan), predicted, Verdict.INCONCLUSIVE, error_kind.value, fixed_epsilon_bounds)
    fit_ns = np.array([q.n for q in fitted], dtype=float)
    std_errors = np.array([q.std_error for q in fitted])
    if samples is None and np.any(std_errors <= 0.0):
        raise InsufficientData("weighted BMO points need positive standard errors")
    slope = _fit(fit_ns, errors, std_errors)

    boot = np.empty(resamples)
    for b in range(resamples):
        if samples is None:
            draw = np.abs(errors + std_errors * rng.standard_normal(len(errors)))
        else:
            draw = np.array([_lp(samples[q.n][rng.integers(0, len(samples[q.n]), len(samples[q.n]))], p) for q in fitted])
        if np.any(draw <= 0.0):
            boot[b] = math.nan
            continue
        boot[b] = _fit(fit_ns, draw, std_errors)
    boot = boot[np.isfinite(boot)]
    if not len(boot):
        return RateReport(points, slope, (math.nan, math.nan), predicted, Verdict.INCONCLUSIVE, error_kind.value, fixed_epsilon_bounds)
    lo, hi = (float(v) for v in np.percentile(boot, [2.5, 97.5]))
    lo, hi = min(lo, slope), max(hi, slope)
    consistent = lo - RATE_TOLERANCE <= predicted <= hi + RATE_TOLERANCE
    verdict = Verdict.CONSISTENT if consistent else Verdict.INCONSISTENT
    logger.info("slope %.4f in [%.4f, %.4f], predicted %.4f: %s", slope, lo, hi, predicted, verdict.value)
    return RateReport(points, slope, (lo, hi), predicted, verdict, error_kind.value, fixed_epsilon_bounds)


@dataclass(frozen=True)
class TailDecay:
    exponent: float
    r_squared: float
    thresholds: tuple
    local_exponents: tuple
    super_polynomial: bool


def tail_decay(samples, thresholds=None, min_samples=MIN_TAIL_SAMPLES):
    """Polynomial decay exponent of P(|X| > x) over a threshold range by log-log regression

    Local exponents increasing along the range flag a super-polynomial tail.
    """
    samples = np.abs(np.asarray(samples, dtype=float).ravel())
    if len(samples) < min_samples:
        raise InsufficientData("{} samples, at least {} are needed".format(len(samples), int(min_samples)))
    if not np.any(samples > 0):
        raise InsufficientData("samples have no variation")
    if thresholds is None:
        lo, hi = np.quantile(samples, [0.9, 0.9999])
        if not lo > 0 or not hi > lo:
            raise InsufficientData("samples have no variation in their upper tail")
        thresholds = np.geomspace(lo, hi, 16)
    thresholds = np.asarray(thresholds, dtype=float)
    ordered = np.sort(samples)
    survival = 1.0 - np.searchsorted(ordered, thresholds, side="right") / len(ordered)
    keep = (survival > 0) & (thresholds > 0)
    if np.count_nonzero(keep) < 3:
        raise InsufficientData("fewer than 3 thresholds with observed exceedances")
    x, y = np.log(thresholds[keep]), np.log(survival[keep])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - float(np.sum(residual ** 2) / total) if total > 0 else 1.0
    local = -np.diff(y) / np.diff(x)
    third = max(1, len(local) // 3)
    rising = bool(np.mean(local[-third:]) > 1.25 * np.mean(local[:third]))
    return TailDecay(float(-slope), r_squared, tuple(thresholds[keep]), tuple(local), rising)
