from dataclasses import dataclass

import numpy as np
from scipy import stats

from exceptions import ModelError

from .LevyMeasure import LevyMeasure


@dataclass(frozen=True)
class Merton(LevyMeasure):
    """
    Gaussian jumps arriving at a Poisson rate.

    Params

      - ``intensity``: jump rate λ
      - ``mu``: mean jump size
      - ``delta``: jump size standard deviation
    """

    intensity: float
    mu: float
    delta: float

    family = "merton"
    has_closed_form = True

    def __post_init__(self):
        if self.intensity <= 0 or self.delta <= 0:
            raise ModelError("Merton intensity and jump volatility must be positive")

    def params(self):
        return {"intensity": self.intensity, "mu": self.mu, "delta": self.delta}

    def density(self, x):
        return self.intensity * stats.norm.pdf(x, loc=self.mu, scale=self.delta)

    def log_density(self, x):
        return np.log(self.intensity) + stats.norm.logpdf(x, loc=self.mu, scale=self.delta)

    def support(self):
        return -np.inf, np.inf

    def tail_finite(self, p, side):
        return True

    def small_moment_finite(self, beta):
        return True

    @property
    def finite_activity(self):
        return True

    def total_mass(self):
        return self.intensity

    def tail_mass(self, delta):
        if delta <= 0:
            return self.intensity
        inside = stats.norm.cdf(delta, self.mu, self.delta) - stats.norm.cdf(-delta, self.mu, self.delta)
        return self.intensity * (1.0 - inside)

    def truncated_mean(self):
        """E[J; |J| <= 1] for one jump J"""
        a = (-1.0 - self.mu) / self.delta
        b = (1.0 - self.mu) / self.delta
        return self.mu * (stats.norm.cdf(b) - stats.norm.cdf(a)) + self.delta * (
            stats.norm.pdf(a) - stats.norm.pdf(b)
        )

    def laplace_exponent(self, z):
        z = np.asarray(z, dtype=complex)
        mgf = np.exp(z * self.mu + 0.5 * z * z * self.delta ** 2)
        return self.intensity * (mgf - 1.0 - z * self.truncated_mean())

    def big_jump_sampler(self, delta):
        def sample(rng, size):
            out = rng.normal(self.mu, self.delta, size)
            if delta > 0:
                redo = np.abs(out) <= delta
                while np.any(redo):
                    out[redo] = rng.normal(self.mu, self.delta, int(redo.sum()))
                    redo = np.abs(out) <= delta
            return out

        return sample
