from dataclasses import dataclass

import numpy as np

from .LevyMeasure import LevyMeasure


@dataclass(frozen=True)
class Zero(LevyMeasure):
    """The zero measure: no jumps"""

    family = "zero"
    has_closed_form = True
    has_density = False

    def params(self):
        return {}

    def support(self):
        return None

    def tail_finite(self, p, side):
        return True

    def small_moment_finite(self, beta):
        return True

    @property
    def finite_activity(self):
        return True

    def total_mass(self):
        return 0.0

    def tail_mass(self, delta):
        return 0.0

    def laplace_exponent(self, z):
        return np.zeros_like(np.asarray(z, dtype=complex))

    def integrate(self, f, lo=-np.inf, hi=np.inf, points=(), with_error=False):
        return (0.0, 0.0) if with_error else 0.0

    def reweight(self, a):
        return self

    def image(self, transform):
        return self
