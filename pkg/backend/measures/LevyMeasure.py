import logging
from abc import ABC, abstractmethod

import numpy as np

from exceptions import QuadratureFailure
from quadrature import quad_split, quad_split_complex
from utils import SAMPLER_CELLS

logger = logging.getLogger(__name__)

# relative tail mass left out by the tabulated sampler
SAMPLER_TAIL = 1e-12
# Gauss-Legendre nodes per sampler cell
SAMPLER_NODES = 8


def exp_minus_linear(w):
    """e^w - 1 - w without cancellation for small |w| (real or complex)"""
    w = np.asarray(w)
    small = np.abs(w) < 1e-3
    series = w * w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0 + w / 120.0)))
    safe = np.where(small, 0.0, w)
    return np.where(small, series, np.exp(safe) - 1.0 - safe)


class LevyMeasure(ABC):
    """
    Lévy measure of a one-dimensional Lévy process.

    Families implement their density (and/or atoms), support, tail and small-jump
    integrability metadata. Everything else (integrals, the Laplace exponent, tail masses,
    big-jump samplers) has a generic implementation that families may replace with closed
    forms.

    Conventions

      - ``support()`` returns the closed support hull ``(lo, hi)`` or None for the zero measure
      - ``tail_finite(p, side)`` answers ∫ e^{px} ν(dx) < ∞ over x > 1 (``right``) or x < -1 (``left``)
      - ``small_moment_finite(beta)`` answers ∫_{|x|<=1} |x|^beta ν(dx) < ∞
      - ``laplace_exponent(z)`` is ∫ (e^{zx} - 1 - zx 1{|x|<=1}) ν(dx)
    """

    family = "levy"
    has_closed_form = False
    has_density = True

    @abstractmethod
    def params(self):
        """Parameters as a plain dict"""

    @abstractmethod
    def support(self):
        pass

    @abstractmethod
    def tail_finite(self, p, side):
        pass

    @abstractmethod
    def small_moment_finite(self, beta):
        pass

    @property
    @abstractmethod
    def finite_activity(self):
        pass

    @property
    def s1_alpha(self):
        return None

    @property
    def s2_alpha(self):
        return self.s1_alpha

    def density(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def log_density(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.density(x))

    def atoms(self):
        """Point masses as (sizes, weights)"""
        return np.empty(0), np.empty(0)

    def exp_moment_finite(self, p):
        """∫_{|x|>1} e^{px} ν(dx) < ∞"""
        return self.tail_finite(p, "left") and self.tail_finite(p, "right")

    def power_tail_finite(self, p):
        """∫_{x>1} x^p ν(dx) < ∞; exponential or lighter tails by default"""
        return True

    def is_zero(self):
        return self.support() is None

    # Integrals

    def _bounds(self, lo, hi):
        hull = self.support()
        if hull is None:
            return lo, lo
        return max(lo, hull[0]), min(hi, hull[1])

    def integrate(self, f, lo=-np.inf, hi=np.inf, points=(), with_error=False):
        """∫_{(lo, hi]} f(x) ν(dx), density part by adaptive quadrature, atoms summed.

        :param f: real callable, must make f(x)·density(x) integrable near 0
        :param points: extra break points, 0 and ±1 are always used
        """
        value, error = 0.0, 0.0
        if self.has_density:
            a, b = self._bounds(lo, hi)
            value, error = quad_split(
                lambda x: f(x) * self.density(x), a, b, points=(-1.0, 0.0, 1.0) + tuple(points)
            )
        sizes, weights = self.atoms()
        inside = (sizes > lo) & (sizes <= hi)
        if np.any(inside):
            value += float(sum(f(s) * w for s, w in zip(sizes[inside], weights[inside])))
        return (value, error) if with_error else value

    def integrate_complex(self, f, lo=-np.inf, hi=np.inf, points=()):
        value = 0.0 + 0.0j
        if self.has_density:
            a, b = self._bounds(lo, hi)
            value, _ = quad_split_complex(
                lambda x: f(x) * self.density(x), a, b, points=(-1.0, 0.0, 1.0) + tuple(points)
            )
        sizes, weights = self.atoms()
        inside = (sizes > lo) & (sizes <= hi)
        if np.any(inside):
            value += complex(sum(f(s) * w for s, w in zip(sizes[inside], weights[inside])))
        return value

    def laplace_exponent(self, z):
        """∫ (e^{zx} - 1 - zx 1{|x|<=1}) ν(dx), vectorized over complex z"""
        z = np.asarray(z, dtype=complex)
        out = np.array([self._laplace_quadrature(w) for w in z.ravel()], dtype=complex)
        return out.reshape(z.shape)

    def _laplace_quadrature(self, z):
        value = 0.0 + 0.0j
        hull = self.support()
        if hull is None:
            return value
        lo, hi = hull
        if self.has_density:

            def near(x):
                return complex(exp_minus_linear(z * x)) * self.density(x)

            def far(x):
                d = self.log_density(x)
                if not np.isfinite(d):
                    return 0.0j
                return np.exp(z * x + d) - np.exp(d)

            part, _ = quad_split_complex(near, max(lo, -1.0), min(hi, 1.0), points=(0.0,))
            value += part
            if lo < -1.0:
                part, _ = quad_split_complex(far, lo, min(hi, -1.0))
                value += part
            if hi > 1.0:
                part, _ = quad_split_complex(far, max(lo, 1.0), hi)
                value += part
        sizes, weights = self.atoms()
        for s, w in zip(sizes, weights):
            value += w * (np.exp(z * s) - 1.0 - (z * s if abs(s) <= 1.0 else 0.0))
        if not np.isfinite(value):
            raise QuadratureFailure("non-finite Laplace exponent at z={}".format(z))
        return value

    def tail_mass(self, delta):
        """ν(|x| > delta)"""
        if delta <= 0:
            return self.total_mass()
        return self.integrate(lambda x: 1.0, -np.inf, -delta) + self.integrate(lambda x: 1.0, delta, np.inf)

    def total_mass(self):
        if not self.finite_activity:
            return np.inf
        return self.integrate(lambda x: 1.0)

    def small_variance(self, delta):
        """∫_{|x|<=delta} x² ν(dx)"""
        if delta <= 0:
            return 0.0
        return self.integrate(lambda x: x * x, np.nextafter(-delta, -np.inf), delta, points=(0.0,))

    def compensator_mean(self, delta):
        """∫_{delta<|x|<=1} x ν(dx), the drift removed by truncating at delta"""
        if delta >= 1.0:
            return 0.0
        if delta <= 0:
            return self.integrate(lambda x: x, np.nextafter(-1.0, -np.inf), 1.0, points=(0.0,))
        left = self.integrate(lambda x: x, np.nextafter(-1.0, -np.inf), -delta)
        right = self.integrate(lambda x: x, delta, 1.0)
        return left + right

    # Transformations

    def reweight(self, a):
        """(1 - a(eˣ-1)) ν(dx)"""
        from measures.Transformed import Reweighted

        if a == 0.0:
            return self
        return Reweighted(self, float(a))

    def image(self, transform):
        """ν∘T⁻¹ for a monotone TransformMap T"""
        from measures.Transformed import Image

        return Image(self, transform)

    # Sampling

    def big_jump_sampler(self, delta):
        """Sampler of the normalized law of jumps with |x| > delta"""
        return TabulatedSampler(self, delta)

    def to_dict(self):
        return {"family": self.family, "params": self.params()}


class TabulatedSampler:
    """
    Inverse-CDF sampler of ν restricted to |x| > delta.

    The density is integrated cell by cell with Gauss-Legendre nodes on a grid that is
    geometric near delta and reaches until the neglected tail mass is negligible. Atoms
    are kept as zero-width cells. Within a cell the inverse CDF is linear.
    """

    def __init__(self, measure, delta, cells=SAMPLER_CELLS):
        self.delta = float(delta)
        lefts, rights, masses = [], [], []
        hull = measure.support()
        if hull is not None and measure.has_density:
            for side in (-1.0, 1.0):
                edge = hull[1] if side > 0 else -hull[0]
                if edge <= self.delta:
                    continue
                grid = self._side_grid(measure, side, edge, cells)
                a, b = grid[:-1], grid[1:]
                mass = _cell_masses(measure, side * a, side * b)
                lefts.append(np.minimum(side * a, side * b))
                rights.append(np.maximum(side * a, side * b))
                masses.append(mass)
        sizes, weights = measure.atoms()
        keep = np.abs(sizes) > self.delta
        lefts.append(sizes[keep])
        rights.append(sizes[keep])
        masses.append(weights[keep])
        self.lefts = np.concatenate(lefts)
        self.rights = np.concatenate(rights)
        mass = np.concatenate(masses)
        self.total = float(mass.sum())
        self.cumulative = np.cumsum(mass)
        self.masses = mass
        if self.total <= 0:
            logger.debug("empty big-jump law for delta=%s", delta)

    def _side_grid(self, measure, side, edge, cells):
        far = min(edge, max(1.0, 2.0 * self.delta))
        while far < edge:
            tail, _ = quad_split(lambda x: measure.density(side * x), far, edge)
            reference, _ = quad_split(lambda x: measure.density(side * x), max(self.delta, 1e-300), far)
            if tail <= SAMPLER_TAIL * max(reference, 1e-300) or far >= 512.0:
                break
            far *= 2.0
        far = min(far, edge)
        if self.delta > 0:
            return np.geomspace(self.delta, far, cells + 1)
        return np.linspace(0.0, far, cells + 1)

    def __call__(self, rng, size):
        if size == 0 or self.total <= 0:
            return np.empty(0)
        u = rng.random(size) * self.total
        idx = np.minimum(np.searchsorted(self.cumulative, u, side="right"), len(self.masses) - 1)
        start = self.cumulative[idx] - self.masses[idx]
        mass = self.masses[idx]
        frac = np.divide(u - start, mass, out=np.zeros_like(u), where=mass > 0)
        return self.lefts[idx] + np.clip(frac, 0.0, 1.0) * (self.rights[idx] - self.lefts[idx])


def _cell_masses(measure, a, b):
    nodes, weights = np.polynomial.legendre.leggauss(SAMPLER_NODES)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    values = measure.density(x)
    values = np.where(np.isfinite(values), values, 0.0)
    return half * (values @ weights)
