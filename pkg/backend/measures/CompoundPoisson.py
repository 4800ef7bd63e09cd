from dataclasses import dataclass

import numpy as np

from exceptions import ModelError

from .LevyMeasure import LevyMeasure


@dataclass(frozen=True)
class CompoundPoisson(LevyMeasure):
    """
    Compound Poisson measure with a discrete jump law.

    Params

      - ``intensity``: expected number of jumps per unit time
      - ``sizes``: jump sizes, all nonzero
      - ``probs``: probabilities of the sizes, summing to one
    """

    intensity: float
    sizes: tuple
    probs: tuple = None

    family = "compound_poisson"
    has_closed_form = True
    has_density = False

    def __post_init__(self):
        sizes = tuple(float(s) for s in np.atleast_1d(self.sizes))
        probs = self.probs
        if probs is None:
            probs = (1.0 / len(sizes),) * len(sizes)
        probs = tuple(float(p) for p in np.atleast_1d(probs))
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)
        if self.intensity <= 0:
            raise ModelError("compound Poisson intensity must be positive")
        if len(sizes) != len(probs) or not sizes:
            raise ModelError("sizes and probs must be non-empty and of equal length")
        if any(s == 0.0 for s in sizes):
            raise ModelError("a Lévy measure carries no mass at 0")
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise ModelError("jump probabilities must be nonnegative and sum to one")

    def params(self):
        return {"intensity": self.intensity, "sizes": list(self.sizes), "probs": list(self.probs)}

    def atoms(self):
        return np.array(self.sizes), self.intensity * np.array(self.probs)

    def support(self):
        return min(self.sizes), max(self.sizes)

    def tail_finite(self, p, side):
        return True

    def small_moment_finite(self, beta):
        return True

    @property
    def finite_activity(self):
        return True

    def total_mass(self):
        return self.intensity

    def laplace_exponent(self, z):
        z = np.asarray(z, dtype=complex)
        sizes, weights = self.atoms()
        x = sizes.reshape((1,) * z.ndim + (-1,))
        zz = z[..., None]
        inner = np.exp(zz * x) - 1.0 - zz * x * (np.abs(x) <= 1.0)
        return inner @ weights

    def reweight(self, a):
        if a == 0.0:
            return self
        sizes, weights = self.atoms()
        weights = weights * (1.0 - a * np.expm1(sizes))
        total = float(weights.sum())
        return CompoundPoisson(total, tuple(sizes), tuple(weights / total))

    def image(self, transform):
        return CompoundPoisson(self.intensity, tuple(transform.forward(np.array(self.sizes))), self.probs)

    def big_jump_sampler(self, delta):
        sizes, weights = self.atoms()
        keep = np.abs(sizes) > delta
        sizes, weights = sizes[keep], weights[keep]

        def sample(rng, size):
            if size == 0 or not len(sizes):
                return np.empty(0)
            return rng.choice(sizes, size=size, p=weights / weights.sum())

        return sample
