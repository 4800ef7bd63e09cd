from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from exceptions import ModelError
from quadrature import quad_split

from .LevyMeasure import LevyMeasure


@dataclass(frozen=True)
class NIG(LevyMeasure):
    """
    Normal inverse Gaussian measure (δα/π) e^{βx} K₁(α|x|)/|x|.

    Stable-like of index 1 near the origin.
    """

    alpha: float
    beta: float
    delta: float

    family = "nig"
    has_closed_form = True

    def __post_init__(self):
        if self.alpha <= 0 or self.delta <= 0 or abs(self.beta) >= self.alpha:
            raise ModelError("NIG needs alpha > |beta| and delta > 0")

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta, "delta": self.delta}

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (
                np.log(self.delta * self.alpha / np.pi)
                + self.beta * x
                - self.alpha * ax
                + np.log(special.k1e(self.alpha * ax))
                - np.log(ax)
            )

    def density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(self.log_density(x))
        return np.where(x == 0, 0.0, out)

    def support(self):
        return -np.inf, np.inf

    def tail_finite(self, p, side):
        if side == "right":
            return p <= self.alpha - self.beta
        return p >= -self.alpha - self.beta

    def small_moment_finite(self, beta):
        return beta > 1.0

    @property
    def finite_activity(self):
        return False

    @property
    def s1_alpha(self):
        return 1.0

    @cached_property
    def big_jump_mean(self):
        right, _ = quad_split(lambda x: x * self.density(x), 1.0, np.inf)
        left, _ = quad_split(lambda x: x * self.density(x), -np.inf, -1.0)
        return right + left

    def compensated_exponent(self, z):
        """∫ (e^{zx} - 1 - zx) ν(dx)"""
        z = np.asarray(z, dtype=complex)
        gamma = np.sqrt(self.alpha ** 2 - self.beta ** 2)
        return self.delta * (gamma - np.sqrt(self.alpha ** 2 - (self.beta + z) ** 2)) - z * self.delta * self.beta / gamma

    def laplace_exponent(self, z):
        z = np.asarray(z, dtype=complex)
        return self.compensated_exponent(z) + z * self.big_jump_mean
