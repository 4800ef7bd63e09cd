"""Path generation, time nets and discretizations of the hedging integral.

Jumps larger than a cutoff δ are simulated exactly and kept in a ledger, smaller jumps are
replaced by a Brownian term of matched variance. Riemann sums are taken along time nets,
the jump-adjusted scheme adds corrections at the jumps that exceed ε(T-t)^κ, and the
reference value of ∫ϑ_{t-} dS_t is a left-point sum on a refinement of the fine grid.
"""

import logging
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import pandas as pd

from exceptions import ModelError, OracleNotConverged
from utils import (
    FINE_GRID,
    JUMP_RATE_BUDGET,
    ORACLE_REFINEMENT,
    ORACLE_TOLERANCE,
    REFINE_FRACTION,
    REFINE_MIN_GAP,
    REFINE_SHARE,
    write_csv,
)

logger = logging.getLogger(__name__)

PATH_MAGIC = b"LVYP"
PATH_VERSION = 1
# magic, version, grid size, jump count, maturity, s0, small-jump sigma, delta, drift,
# diffusion, seed, path index
PATH_HEADER = struct.Struct("<4sIQQddddddqq")

CUTOFF_FLOOR = 1e-12
CUTOFF_STEPS = 60


def rng_for(seed, path_index):
    """Counter-based stream keyed by (master seed, path index)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(path_index)])))


@dataclass(frozen=True, eq=False)
class TimeNet:
    """Rebalancing times 0 = t_0 < ... < t_n = T

    ``remaining`` holds T - t_i; adapted nets compute it directly so that the mesh stays
    exact where t_i rounds to T.
    """

    knots: np.ndarray
    theta_tag: Optional[float] = None
    remaining: Optional[np.ndarray] = None

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if knots.ndim != 1 or len(knots) < 2 or knots[0] != 0.0:
            raise ModelError("a time net starts at 0 and has at least two knots")
        remaining = knots[-1] - knots if self.remaining is None else np.asarray(self.remaining, dtype=float)
        object.__setattr__(self, "remaining", remaining)
        if np.any(np.diff(remaining) >= 0) or np.any(np.diff(knots) < 0):
            raise ModelError("time-net knots must be strictly increasing")

    @property
    def n(self):
        return len(self.knots) - 1

    @property
    def maturity(self):
        return float(self.knots[-1])

    def mesh(self, theta):
        return mesh_size(self, theta)

    def index_of(self, times):
        """Knot indices of times that must be knots of this net"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        idx = np.minimum(np.searchsorted(self.knots, times), len(self.knots) - 1)
        missing = self.knots[idx] != times
        if np.any(missing):
            raise ModelError("times {} are not knots of the n={} net".format(times[missing], self.n))
        return idx


def adapted_time_net(n, theta, maturity):
    """t_i = T(1 - (1 - i/n)^{1/θ}), uniform for θ = 1"""
    if n < 1:
        raise ModelError("a time net needs n >= 1")
    if not 0.0 < theta <= 1.0:
        raise ModelError("theta must lie in (0, 1]")
    i = np.arange(n + 1, dtype=float)
    if theta == 1.0:
        knots = maturity * (i / n)
        remaining = maturity * ((n - i) / n)
    else:
        remaining = maturity * ((n - i) / n) ** (1.0 / theta)
        knots = maturity - remaining
    knots[0], knots[-1] = 0.0, maturity
    remaining[0], remaining[-1] = maturity, 0.0
    return TimeNet(knots, theta, remaining)


def mesh_size(net, theta):
    """max_i (t_i - t_{i-1}) / (T - t_{i-1})^{1-θ}"""
    left = net.remaining[:-1]
    gaps = left - net.remaining[1:]
    return float(np.max(gaps / left ** (1.0 - theta)))


def fine_grid(maturity, m=FINE_GRID, extra_times=()):
    """Uniform grid on [0, T(1-f)) and a geometric refinement toward T, extra times merged"""
    refined = max(2, int(REFINE_SHARE * m))
    uniform = np.linspace(0.0, maturity * (1.0 - REFINE_FRACTION), max(2, m - refined - 1), endpoint=False)
    tail = maturity - np.geomspace(maturity * REFINE_FRACTION, maturity * REFINE_MIN_GAP, refined)
    extra = np.asarray(list(extra_times), dtype=float)
    extra = extra[(extra >= 0.0) & (extra <= maturity)]
    return np.unique(np.concatenate([uniform, tail, extra, [0.0, maturity]]))


@lru_cache(maxsize=64)
def jump_cutoff(nu, budget=JUMP_RATE_BUDGET):
    """Smallest δ <= 1 with ν(|x| > δ) <= budget, 0 for finite activity"""
    if nu.is_zero() or nu.finite_activity:
        return 0.0
    if nu.tail_mass(1.0) > budget:
        logger.warning("more than %g jumps per unit time beyond 1, cutting at δ=1", budget)
        return 1.0
    lo, hi = math.log(CUTOFF_FLOOR), 0.0
    if nu.tail_mass(CUTOFF_FLOOR) <= budget:
        return CUTOFF_FLOOR
    for _ in range(CUTOFF_STEPS):
        mid = 0.5 * (lo + hi)
        if nu.tail_mass(math.exp(mid)) > budget:
            lo = mid
        else:
            hi = mid
    return math.exp(hi)


@dataclass(frozen=True)
class JumpDynamics:
    """Parameters of the simulated process: drift and diffusion after absorbing jumps below δ"""

    delta: float
    drift: float
    diffusion: float
    small_jump_sigma: float
    rate: float
    sampler: object = field(repr=False, default=None)


@lru_cache(maxsize=64)
def jump_dynamics(triplet, delta=None, budget=JUMP_RATE_BUDGET):
    nu = triplet.nu
    if delta is None:
        delta = jump_cutoff(nu, budget)
    delta = min(float(delta), 1.0)
    if nu.is_zero():
        return JumpDynamics(0.0, triplet.gamma, triplet.sigma, 0.0, 0.0)
    small = nu.small_variance(delta)
    drift = triplet.gamma - nu.compensator_mean(delta)
    rate = nu.tail_mass(delta)
    sampler = nu.big_jump_sampler(delta) if rate > 0 else None
    return JumpDynamics(delta, drift, math.sqrt(triplet.sigma ** 2 + small), math.sqrt(small), rate, sampler)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """
    Simulated log-price path.

    ``log_x`` holds X on ``grid`` (S = s0·e^X), jump times are part of the grid and the
    ledger keeps every simulated jump with its pre-jump log-price.
    """

    grid: np.ndarray
    log_x: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    jump_pre_log: np.ndarray
    seed: int
    path_index: int
    small_jump_sigma: float
    delta: float
    drift: float
    diffusion: float
    s0: float = 1.0

    @property
    def maturity(self):
        return float(self.grid[-1])

    def prices(self):
        return self.s0 * np.exp(self.log_x)

    def index_of(self, times):
        """Grid indices of times that must lie on the grid"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        idx = np.searchsorted(self.grid, times)
        idx = np.minimum(idx, len(self.grid) - 1)
        if np.any(self.grid[idx] != times):
            raise ValueError("times {} are not on the path grid".format(times[self.grid[idx] != times]))
        return idx

    def jump_at(self, times):
        """Total jump size at each of the given times"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if not len(self.jump_times):
            return np.zeros(len(times))
        lo = np.searchsorted(self.jump_times, times, side="left")
        hi = np.searchsorted(self.jump_times, times, side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.jump_sizes)])
        return cum[hi] - cum[lo]

    def left_log(self, times):
        """X_{t-} at grid times"""
        idx = self.index_of(times)
        return self.log_x[idx] - self.jump_at(self.grid[idx])

    def left_prices(self, times):
        return self.s0 * np.exp(self.left_log(times))


def _jump_ledger(dynamics, maturity, rng):
    if dynamics.rate <= 0:
        return np.empty(0), np.empty(0)
    count = rng.poisson(dynamics.rate * maturity)
    times = np.sort(rng.uniform(0.0, maturity, count))
    times = np.where(times == 0.0, np.nextafter(0.0, 1.0), times)
    sizes = np.asarray(dynamics.sampler(rng, count), dtype=float)
    return times, sizes


def sample_path(triplet, maturity, m=FINE_GRID, delta=None, seed=0, path_index=0, extra_times=(), s0=1.0):
    """Simulate X on the fine grid with an explicit ledger of jumps larger than δ

    :raises UnsupportedSampler: for measures that cannot draw their big jumps
    """
    dynamics = jump_dynamics(triplet, delta)
    rng = rng_for(seed, path_index)
    times, sizes = _jump_ledger(dynamics, maturity, rng)
    grid = np.unique(np.concatenate([fine_grid(maturity, m, extra_times), times]))
    gaps = np.diff(grid)
    noise = rng.standard_normal(len(gaps))
    brownian = np.concatenate([[0.0], np.cumsum(np.sqrt(gaps) * noise)])
    cum = np.concatenate([[0.0], np.cumsum(sizes)])
    jumps = cum[np.searchsorted(times, grid, side="right")]
    log_x = dynamics.drift * grid + dynamics.diffusion * brownian + jumps
    if len(times):
        idx = np.searchsorted(grid, times)
        pre = log_x[idx] - (cum[np.searchsorted(times, times, side="right")] - cum[np.searchsorted(times, times, side="left")])
    else:
        pre = np.empty(0)
    return SamplePath(
        grid=grid,
        log_x=log_x,
        jump_times=times,
        jump_sizes=sizes,
        jump_pre_log=pre,
        seed=int(seed),
        path_index=int(path_index),
        small_jump_sigma=dynamics.small_jump_sigma,
        delta=dynamics.delta,
        drift=dynamics.drift,
        diffusion=dynamics.diffusion,
        s0=float(s0),
    )


def sample_terminal(triplet, tau, size, rng, delta=None):
    """Draws of X_τ with the same jump treatment as sample_path"""
    dynamics = jump_dynamics(triplet, delta)
    out = dynamics.drift * tau + dynamics.diffusion * math.sqrt(tau) * rng.standard_normal(size)
    if dynamics.rate > 0:
        counts = rng.poisson(dynamics.rate * tau, size)
        sizes = np.asarray(dynamics.sampler(rng, int(counts.sum())), dtype=float)
        out += np.bincount(np.repeat(np.arange(size), counts), weights=sizes, minlength=size)
    return out


@dataclass(frozen=True, eq=False)
class ThresholdTimes:
    rho: np.ndarray
    sizes: np.ndarray

    @property
    def count(self):
        """𝒩(ε, κ), terminal time included"""
        return len(self.rho)


def jump_threshold_times(path, epsilon, kappa):
    """Jump times with |e^x - 1| > ε(T-t)^κ, followed by T"""
    if epsilon <= 0 or not 0.0 <= kappa < 0.5:
        raise ModelError("need ε > 0 and κ in [0, 1/2)")
    maturity = path.maturity
    t, x = path.jump_times, path.jump_sizes
    hit = np.abs(np.expm1(x)) > epsilon * (maturity - t) ** kappa
    rho, sizes = t[hit], x[hit]
    if not len(rho) or rho[-1] != maturity:
        rho = np.append(rho, maturity)
        sizes = np.append(sizes, 0.0)
    return ThresholdTimes(rho, sizes)


def threshold_floor(path, epsilon, kappa):
    """Smallest threshold ε(T-t)^κ over the grid points before T"""
    return epsilon * (path.maturity - path.grid[-2]) ** kappa


def check_cutoff(path, epsilon, kappa):
    """False, with a warning, when a Gaussian-approximated small jump could cross the smallest threshold"""
    floor = threshold_floor(path, epsilon, kappa)
    if path.delta > 0.0 and math.expm1(path.delta) >= floor:
        logger.warning(
            "small-jump cutoff %.3g reaches the smallest threshold %.3g (epsilon=%.3g, kappa=%.3g), "
            "corrections may miss approximated jumps",
            path.delta,
            floor,
            epsilon,
            kappa,
        )
        return False
    return True


def riemann_approx(path, strategy, net, with_path=False):
    """Σ ϑ(t_{i-1}, S_{t_{i-1}-}) (S_{t_i} - S_{t_{i-1}})

    :raises ValueError: when a knot is not on the path grid
    """
    knots = net.knots
    idx = path.index_of(knots)
    prices = path.prices()[idx]
    holdings = np.asarray(strategy(knots[:-1], path.left_prices(knots[:-1])), dtype=float)
    terms = holdings * np.diff(prices)
    if with_path:
        return float(terms.sum()), np.concatenate([[0.0], np.cumsum(terms)])
    return float(terms.sum())


@dataclass(frozen=True, eq=False)
class CorrectedResult:
    a_rm: float
    a_corr: float
    correction_count: int
    rho: np.ndarray
    corrections: np.ndarray
    rm_path: np.ndarray
    corr_path: np.ndarray


def corrected_approx(path, strategy, net, epsilon, kappa):
    """Riemann sum plus (ϑ(ρ, S_{ρ-}) - ϑ(t_{i-1}, S_{t_{i-1}-})) ΔS_ρ at every triggered ρ < T"""
    a_rm, rm_path = riemann_approx(path, strategy, net, with_path=True)
    times = jump_threshold_times(path, epsilon, kappa)
    knots = net.knots
    inner = times.rho < net.maturity
    rho, sizes = times.rho[inner], times.sizes[inner]
    corrections = np.zeros(len(rho))
    if len(rho):
        pre_log = path.left_log(rho)
        pre_price = path.s0 * np.exp(pre_log)
        live = np.asarray(strategy(rho, pre_price), dtype=float)
        # ρ in (t_{i-1}, t_i] belongs to the interval ending at t_i
        start = knots[np.searchsorted(knots, rho, side="left") - 1]
        frozen = np.asarray(strategy(start, path.left_prices(start)), dtype=float)
        corrections = (live - frozen) * pre_price * np.expm1(sizes)
    # corrections at ρ in (t_{i-1}, t_i] are booked at t_i
    booked = np.searchsorted(knots, rho, side="left")
    by_knot = np.bincount(booked, weights=corrections, minlength=len(knots))
    corr_path = rm_path + np.cumsum(by_knot)
    return CorrectedResult(
        a_rm=a_rm,
        a_corr=a_rm + float(corrections.sum()),
        correction_count=len(rho),
        rho=times.rho,
        corrections=corrections,
        rm_path=rm_path,
        corr_path=corr_path,
    )


def _oracle_indices(path, intervals, keep):
    m = len(path.grid) - 1
    stride = max(1, m // max(1, intervals))
    idx = np.arange(0, m + 1, stride)
    return np.unique(np.concatenate([idx, [m], path.index_of(path.jump_times) if len(path.jump_times) else [], keep]).astype(int))


def _oracle_sum(path, strategy, idx):
    t = path.grid[idx]
    prices = path.prices()
    left = path.left_prices(t)
    holdings = np.asarray(strategy(t[:-1], left[:-1]), dtype=float)
    continuous = holdings * (left[1:] - prices[idx[:-1]])
    jump = np.zeros(len(t) - 1)
    jumped = path.jump_at(t[1:]) != 0.0
    if np.any(jumped):
        at = t[1:][jumped]
        jump[jumped] = np.asarray(strategy(at, left[1:][jumped]), dtype=float) * (prices[idx[1:]][jumped] - left[1:][jumped])
    return np.concatenate([[0.0], np.cumsum(continuous + jump)])


@dataclass(frozen=True, eq=False)
class OracleResult:
    value: float
    times: np.ndarray
    cumulative: np.ndarray
    difference: float

    def at(self, times):
        idx = np.searchsorted(self.times, times)
        idx = np.minimum(idx, len(self.times) - 1)
        if np.any(self.times[idx] != times):
            raise ValueError("oracle was not evaluated at every requested time")
        return self.cumulative[idx]


def oracle_path(path, strategy, n_ref, k=ORACLE_REFINEMENT, tol=ORACLE_TOLERANCE, keep_times=(), strict=True):
    """Left-point sum of ∫ϑ_{t-}dS on about k·n_ref intervals of the fine grid, jumps handled at
    their pre-jump state, compared with the 2k (or k/2) refinement

    :raises OracleNotConverged: when the two refinements differ by more than tol·max(1, |value|)
    """
    m = len(path.grid) - 1
    keep = path.index_of(keep_times) if len(keep_times) else np.empty(0, dtype=int)
    fine = k * n_ref
    coarse = 2 * fine if 2 * fine <= m else max(1, fine // 2)
    idx = _oracle_indices(path, fine, keep)
    cumulative = _oracle_sum(path, strategy, idx)
    check = _oracle_sum(path, strategy, _oracle_indices(path, coarse, keep))[-1]
    value = float(cumulative[-1])
    difference = abs(value - check)
    if difference > tol * max(1.0, abs(value)):
        if strict:
            raise OracleNotConverged(
                "oracle moved by {:.3e} under refinement on path {}".format(difference, path.path_index)
            )
        logger.debug("oracle difference %.3e on path %s", difference, path.path_index)
    return OracleResult(value, path.grid[idx], cumulative, difference)


def integral_oracle(path, strategy, n_ref, k=ORACLE_REFINEMENT, tol=ORACLE_TOLERANCE, keep_times=()):
    return oracle_path(path, strategy, n_ref, k, tol, keep_times).value


@dataclass(frozen=True)
class HedgeRun:
    seed: int
    path_index: int
    n: int
    theta: float
    epsilon: float
    kappa: float
    a_rm_terminal: float
    a_corr_terminal: float
    oracle_integral: float
    e_rm: float
    e_corr: float
    correction_count: int
    sup_error_path: float
    net_size: int
    knot_errors: tuple = ()

    def to_dict(self):
        return {
            "seed": self.seed,
            "n": self.n,
            "theta": self.theta,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "e_rm": self.e_rm,
            "e_corr": self.e_corr,
            "n_corrections": self.correction_count,
            "path_index": self.path_index,
            "a_rm": self.a_rm_terminal,
            "a_corr": self.a_corr_terminal,
            "oracle": self.oracle_integral,
            "sup_error": self.sup_error_path,
            "net_size": self.net_size,
        }


def hedge_run(path, strategy, net, epsilon, kappa, oracle):
    """Riemann and corrected hedges of one path against a precomputed oracle"""
    result = corrected_approx(path, strategy, net, epsilon, kappa)
    reference = oracle.at(net.knots)
    combined = np.union1d(net.knots, result.rho)
    return HedgeRun(
        seed=path.seed,
        path_index=path.path_index,
        n=net.n,
        theta=net.theta_tag if net.theta_tag is not None else 1.0,
        epsilon=float(epsilon),
        kappa=float(kappa),
        a_rm_terminal=result.a_rm,
        a_corr_terminal=result.a_corr,
        oracle_integral=oracle.value,
        e_rm=oracle.value - result.a_rm,
        e_corr=oracle.value - result.a_corr,
        correction_count=result.correction_count,
        sup_error_path=float(np.max(np.abs(reference - result.corr_path))),
        net_size=len(combined),
        knot_errors=tuple(reference - result.corr_path),
    )


def hedge_runs_frame(runs):
    return pd.DataFrame([run.to_dict() for run in runs])


def write_hedge_runs(runs, filename, digest):
    write_csv(hedge_runs_frame(runs), filename, digest)


def dump_path(path, filename):
    """Little-endian binary dump: header, grid, log_x, then the jump ledger columns"""
    header = PATH_HEADER.pack(
        PATH_MAGIC,
        PATH_VERSION,
        len(path.grid),
        len(path.jump_times),
        path.maturity,
        path.s0,
        path.small_jump_sigma,
        path.delta,
        path.drift,
        path.diffusion,
        path.seed,
        path.path_index,
    )
    with open(filename, "wb") as f:
        f.write(header)
        for column in (path.grid, path.log_x, path.jump_times, path.jump_sizes, path.jump_pre_log):
            f.write(np.asarray(column, dtype="<f8").tobytes())


def load_path(filename):
    with open(filename, "rb") as f:
        raw = f.read()
    magic, version, m, jumps, _, s0, small, delta, drift, diffusion, seed, index = PATH_HEADER.unpack_from(raw)
    if magic != PATH_MAGIC or version != PATH_VERSION:
        raise ValueError("{} is not a path dump of version {}".format(filename, PATH_VERSION))
    offset = PATH_HEADER.size
    columns = []
    for size in (m, m, jumps, jumps, jumps):
        columns.append(np.frombuffer(raw, dtype="<f8", count=size, offset=offset).astype(float))
        offset += 8 * size
    grid, log_x, times, sizes, pre = columns
    return SamplePath(grid, log_x, times, sizes, pre, seed, index, small, delta, drift, diffusion, s0)
