from dataclasses import dataclass

import numpy as np

from exceptions import ModelError

from .LevyMeasure import LevyMeasure


def _truncated_exp_mean(rate):
    """∫_0^1 x·rate·e^{-rate x} dx"""
    return -np.expm1(-rate) / rate - np.exp(-rate)


@dataclass(frozen=True)
class Kou(LevyMeasure):
    """
    Double-exponential jumps.

    Params

      - ``intensity``: jump rate λ
      - ``p``: probability of an upward jump
      - ``eta_up``: rate of upward jumps, > 1 so that S has a first moment
      - ``eta_down``: rate of downward jumps
    """

    intensity: float
    p: float
    eta_up: float
    eta_down: float

    family = "kou"
    has_closed_form = True

    def __post_init__(self):
        if self.intensity <= 0:
            raise ModelError("Kou intensity must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ModelError("Kou p must lie in [0, 1]")
        if self.eta_up <= 1.0 or self.eta_down <= 0.0:
            raise ModelError("Kou rates need eta_up > 1 and eta_down > 0")

    def params(self):
        return {"intensity": self.intensity, "p": self.p, "eta_up": self.eta_up, "eta_down": self.eta_down}

    def density(self, x):
        x = np.asarray(x, dtype=float)
        up = self.p * self.eta_up * np.exp(-self.eta_up * np.abs(x))
        down = (1.0 - self.p) * self.eta_down * np.exp(-self.eta_down * np.abs(x))
        return self.intensity * np.where(x > 0, up, np.where(x < 0, down, 0.0))

    def log_density(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.density(x))

    def support(self):
        lo = -np.inf if self.p < 1.0 else 0.0
        hi = np.inf if self.p > 0.0 else 0.0
        return lo, hi

    def tail_finite(self, p, side):
        if side == "right":
            return self.p == 0.0 or p < self.eta_up
        return self.p == 1.0 or p > -self.eta_down

    def small_moment_finite(self, beta):
        return True

    @property
    def finite_activity(self):
        return True

    def total_mass(self):
        return self.intensity

    def tail_mass(self, delta):
        delta = max(delta, 0.0)
        return self.intensity * (
            self.p * np.exp(-self.eta_up * delta) + (1.0 - self.p) * np.exp(-self.eta_down * delta)
        )

    def truncated_mean(self):
        return self.p * _truncated_exp_mean(self.eta_up) - (1.0 - self.p) * _truncated_exp_mean(self.eta_down)

    def laplace_exponent(self, z):
        z = np.asarray(z, dtype=complex)
        mgf = self.p * self.eta_up / (self.eta_up - z) + (1.0 - self.p) * self.eta_down / (self.eta_down + z)
        return self.intensity * (mgf - 1.0 - z * self.truncated_mean())

    def big_jump_sampler(self, delta):
        delta = max(delta, 0.0)
        up = self.p * np.exp(-self.eta_up * delta)
        down = (1.0 - self.p) * np.exp(-self.eta_down * delta)
        p_up = up / (up + down)

        def sample(rng, size):
            sign = np.where(rng.random(size) < p_up, 1.0, -1.0)
            rate = np.where(sign > 0, self.eta_up, self.eta_down)
            return sign * (delta + rng.exponential(1.0, size) / rate)

        return sample
