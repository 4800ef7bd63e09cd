import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from exceptions import ModelError, UnsupportedSampler
from quadrature import quad_split
from utils import TAIL_SPOT_CHECKS

from .LevyMeasure import LevyMeasure

logger = logging.getLogger(__name__)

# slack of the tail spot check, in units of log-density
TAIL_CHECK_SLACK = np.log(10.0)


@dataclass(frozen=True)
class Custom(LevyMeasure):
    """
    Density-defined Lévy measure with declared integrability metadata.

    Params

      - ``fn``: density x -> ν(dx)/dx, vectorized, nonnegative
      - ``lo`` / ``hi``: support hull
      - ``tail_rates``: (left, right) exponential decay rates, the density is bounded by
        c·e^{-rate·|x|} for |x| > 1; used for every exponential-moment check
      - ``activity_index``: declared Blumenthal-Getoor index (2 when unknown)
      - ``stable_like``: declared index of the first stable-like class, if any
      - ``stable_like_weak``: declared index of the second (weaker) class, if any
      - ``sampler``: optional callable (rng, size, delta) -> jumps with |x| > delta
    """

    fn: Callable
    lo: float = -np.inf
    hi: float = np.inf
    tail_rates: tuple = (0.0, 0.0)
    activity_index: float = 2.0
    stable_like: Optional[float] = None
    stable_like_weak: Optional[float] = None
    sampler: Optional[Callable] = None
    name: str = "custom"

    family = "custom"

    def __post_init__(self):
        if self.lo > 0 or self.hi < 0 or self.lo >= self.hi:
            raise ModelError("support hull of a custom measure must straddle 0")
        near, _ = quad_split(
            lambda x: min(x * x, 1.0) * self.density(x), self.lo, self.hi, points=(-1.0, 0.0, 1.0)
        )
        if not np.isfinite(near):
            raise ModelError("custom density does not integrate x²∧1")
        self._check_tails()

    def _check_tails(self):
        """Spot-check the declared decay rates at log-spaced points beyond 1"""
        for side, rate, edge in (("left", self.tail_rates[0], -self.lo), ("right", self.tail_rates[1], self.hi)):
            if edge <= 1.0 or rate <= 0.0:
                continue
            x = np.geomspace(1.0, min(edge, 1.0 + 40.0 / rate), TAIL_SPOT_CHECKS)
            sign = 1.0 if side == "right" else -1.0
            with np.errstate(divide="ignore"):
                profile = np.log(self.density(sign * x)) + rate * x
            profile = profile[np.isfinite(profile)]
            if profile.size and np.max(profile) - profile[0] > TAIL_CHECK_SLACK:
                raise ModelError(
                    "{} tail of {} decays slower than the declared rate {}".format(side, self.name, rate)
                )

    def params(self):
        return {
            "name": self.name,
            "lo": self.lo,
            "hi": self.hi,
            "tail_rates": list(self.tail_rates),
            "activity_index": self.activity_index,
            "stable_like": self.stable_like,
            "stable_like_weak": self.stable_like_weak,
        }

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi) & (x != 0)
        values = np.asarray(self.fn(np.where(inside, x, 1.0)), dtype=float)
        return np.where(inside, values, 0.0)

    def support(self):
        return self.lo, self.hi

    def tail_finite(self, p, side):
        if side == "right":
            return self.hi < np.inf or p < self.tail_rates[1]
        return self.lo > -np.inf or p > -self.tail_rates[0]

    def power_tail_finite(self, p):
        return self.hi < np.inf or self.tail_rates[1] > 0.0

    def small_moment_finite(self, beta):
        return beta >= 2.0 or beta > self.activity_index

    @property
    def finite_activity(self):
        return self.activity_index == 0.0 and np.isfinite(self.total_mass_quadrature())

    def total_mass_quadrature(self):
        mass, _ = quad_split(self.density, self.lo, self.hi, points=(-1.0, 0.0, 1.0))
        return mass

    @property
    def s1_alpha(self):
        return self.stable_like

    @property
    def s2_alpha(self):
        return self.stable_like_weak if self.stable_like_weak is not None else self.stable_like

    def big_jump_sampler(self, delta):
        if self.sampler is None:
            raise UnsupportedSampler("custom measure {} declares no sampler".format(self.name))

        def sample(rng, size):
            return np.asarray(self.sampler(rng, size, delta), dtype=float)

        return sample
