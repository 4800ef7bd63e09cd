from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from exceptions import ModelError
from quadrature import quad_split

from .LevyMeasure import LevyMeasure

# below this distance to Y = 1 the logarithmic limit of the exponent is used
UNIT_INDEX_GAP = 1e-8


@dataclass(frozen=True)
class CGMY(LevyMeasure):
    """
    Tempered stable measure C e^{-M x} x^{-1-Y} for x > 0 and C e^{G x} |x|^{-1-Y} for x < 0.

    Belongs to the stable-like class of index Y.
    """

    C: float
    G: float
    M: float
    Y: float

    family = "cgmy"
    has_closed_form = True

    def __post_init__(self):
        if min(self.C, self.G, self.M) <= 0:
            raise ModelError("CGMY needs C, G, M > 0")
        if not 0.0 < self.Y < 2.0:
            raise ModelError("CGMY needs Y in (0, 2)")

    def params(self):
        return {"C": self.C, "G": self.G, "M": self.M, "Y": self.Y}

    def density(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = np.where(x > 0, self.M, self.G)
            out = self.C * np.exp(-rate * ax) / ax ** (1.0 + self.Y)
        return np.where(x == 0, 0.0, out)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        rate = np.where(x > 0, self.M, self.G)
        with np.errstate(divide="ignore"):
            return np.log(self.C) - rate * np.abs(x) - (1.0 + self.Y) * np.log(np.abs(x))

    def support(self):
        return -np.inf, np.inf

    def tail_finite(self, p, side):
        if side == "right":
            return p <= self.M
        return p >= -self.G

    def small_moment_finite(self, beta):
        return beta > self.Y

    @property
    def finite_activity(self):
        return False

    @property
    def s1_alpha(self):
        return self.Y

    @cached_property
    def big_jump_mean(self):
        """∫_{|x|>1} x ν(dx)"""
        right, _ = quad_split(lambda x: x * self.density(x), 1.0, np.inf)
        left, _ = quad_split(lambda x: x * self.density(x), -np.inf, -1.0)
        return right + left

    def compensated_exponent(self, z):
        """∫ (e^{zx} - 1 - zx) ν(dx)"""
        z = np.asarray(z, dtype=complex)
        C, G, M, Y = self.C, self.G, self.M, self.Y
        if abs(Y - 1.0) < UNIT_INDEX_GAP:
            return C * ((M - z) * np.log1p(-z / M) + (G + z) * np.log1p(z / G))
        bracket = (
            (M - z) ** Y - M ** Y + z * Y * M ** (Y - 1.0)
            + (G + z) ** Y - G ** Y - z * Y * G ** (Y - 1.0)
        )
        return C * special.gamma(-Y) * bracket

    def laplace_exponent(self, z):
        z = np.asarray(z, dtype=complex)
        return self.compensated_exponent(z) + z * self.big_jump_mean
