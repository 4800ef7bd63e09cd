"""Measures derived from a base measure: density reweighting and images under monotone maps."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from quadrature import quad_split, quad_split_complex

from .LevyMeasure import LevyMeasure, exp_minus_linear


@dataclass(frozen=True)
class TransformMap:
    """
    Monotone map of jump sizes fixing 0.

    Kinds

      - ``expm1``: x -> eˣ - 1 (log-price jumps to relative price jumps)
      - ``log1p``: z -> log(1 + z), inverse of ``expm1``
      - ``mmm_jump``: x -> -a(eˣ - 1), jumps of the density martingale U
      - ``mmm_log``: x -> log(1 - a(eˣ - 1)), jumps of V with e^V the density process
    """

    kind: str
    a: float = 0.0

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "expm1":
            return np.expm1(x)
        if self.kind == "log1p":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.log1p(x)
        if self.kind == "mmm_jump":
            return -self.a * np.expm1(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log1p(-self.a * np.expm1(x))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "expm1":
                return np.log1p(y)
            if self.kind == "log1p":
                return np.expm1(y)
            if self.kind == "mmm_jump":
                return np.log1p(-y / self.a)
            return np.log1p(-np.expm1(y) / self.a)

    def inverse_derivative(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "expm1":
                return 1.0 / (1.0 + y)
            if self.kind == "log1p":
                return np.exp(y)
            if self.kind == "mmm_jump":
                return -1.0 / (self.a - y)
            return np.exp(y) / (np.expm1(y) - self.a)

    @property
    def increasing(self):
        if self.kind in ("expm1", "log1p"):
            return True
        return self.a < 0

    def inverts(self, other):
        pair = {self.kind, other.kind}
        return pair == {"expm1", "log1p"}

    def to_dict(self):
        return {"transform": self.kind, "a": self.a}


def _sanitize(x, fallback):
    return fallback if np.isnan(x) else float(x)


@dataclass(frozen=True)
class Reweighted(LevyMeasure):
    """
    Density reweighting (1 - a(eˣ-1)) ν(dx).

    The weight is positive on the support whenever the base market admits a minimal
    martingale measure with density loading ``a``. The Laplace exponent inherits the base
    family's closed form through

        L*(z) = L(z) - a [L(z+1) - L(z) - L(1) - z ∫_{|x|<=1} x(eˣ-1) ν(dx)].
    """

    base: LevyMeasure
    a: float

    family = "reweighted"

    @property
    def has_closed_form(self):
        return self.base.has_closed_form

    @property
    def has_density(self):
        return self.base.has_density

    def weight(self, x):
        return 1.0 - self.a * np.expm1(np.asarray(x, dtype=float))

    def params(self):
        return {"a": self.a}

    def to_dict(self):
        return {"family": self.family, "params": self.params(), "base": self.base.to_dict()}

    def density(self, x):
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.weight(x) * self.base.density(x)
        return np.where(np.isfinite(out), out, 0.0)

    def log_density(self, x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.log(self.weight(x)) + self.base.log_density(x)

    def atoms(self):
        sizes, weights = self.base.atoms()
        return sizes, weights * self.weight(sizes)

    def support(self):
        return self.base.support()

    def tail_finite(self, p, side):
        if side == "right":
            return self.base.tail_finite(p + 1.0, "right")
        return self.base.tail_finite(p, "left")

    def power_tail_finite(self, p):
        return self.base.power_tail_finite(p)

    def small_moment_finite(self, beta):
        return self.base.small_moment_finite(beta)

    @property
    def finite_activity(self):
        return self.base.finite_activity

    @property
    def s1_alpha(self):
        return self.base.s1_alpha

    @property
    def s2_alpha(self):
        return self.base.s2_alpha

    @cached_property
    def linear_correction(self):
        """∫_{|x|<=1} x(eˣ-1) ν(dx) of the base measure"""
        return self.base.integrate(lambda x: x * np.expm1(x), np.nextafter(-1.0, -np.inf), 1.0)

    def laplace_exponent(self, z):
        if not self.base.has_closed_form:
            return super().laplace_exponent(z)
        z = np.asarray(z, dtype=complex)
        base = self.base.laplace_exponent
        shifted = base(z + 1.0) - base(z) - base(np.asarray(1.0 + 0.0j)) - z * self.linear_correction
        return base(z) - self.a * shifted

    def reweight(self, a):
        if a == 0.0:
            return self
        return Reweighted(self, float(a))


@dataclass(frozen=True)
class Image(LevyMeasure):
    """
    Image measure ν∘T⁻¹ under a monotone TransformMap T with T(0) = 0.

    Integrals are pulled back to the base measure, ∫ f dν∘T⁻¹ = ∫ f∘T dν, so every
    functional inherits the base family's quadrature splitting.
    """

    base: LevyMeasure
    transform: TransformMap

    family = "image"

    @property
    def has_density(self):
        return self.base.has_density

    def params(self):
        return self.transform.to_dict()

    def to_dict(self):
        return {"family": self.family, "params": self.params(), "base": self.base.to_dict()}

    def density(self, y):
        y = np.asarray(y, dtype=float)
        x = self.transform.inverse(y)
        jac = np.abs(self.transform.inverse_derivative(y))
        ok = np.isfinite(x) & np.isfinite(jac)
        with np.errstate(invalid="ignore", over="ignore"):
            out = self.base.density(np.where(ok, x, 1.0)) * np.where(ok, jac, 0.0)
        return np.where(ok & (y != 0), out, 0.0)

    def atoms(self):
        sizes, weights = self.base.atoms()
        return self.transform.forward(sizes), weights

    def support(self):
        hull = self.base.support()
        if hull is None:
            return None
        ends = self.transform.forward(np.array(hull, dtype=float))
        lo, hi = (ends[0], ends[1]) if self.transform.increasing else (ends[1], ends[0])
        return _sanitize(lo, -np.inf), _sanitize(hi, np.inf)

    def _preimage(self, lo, hi):
        """x-interval whose image is (lo, hi]"""
        ends = self.transform.inverse(np.array([lo, hi], dtype=float))
        a, b = (ends[0], ends[1]) if self.transform.increasing else (ends[1], ends[0])
        base_hull = self.base.support() or (0.0, 0.0)
        a = base_hull[0] if np.isnan(a) else max(float(a), base_hull[0])
        b = base_hull[1] if np.isnan(b) else min(float(b), base_hull[1])
        return a, b

    def _pulled_points(self, points):
        images = self.transform.inverse(np.array(list(points) + [-1.0, 1.0], dtype=float))
        return tuple(float(p) for p in images if np.isfinite(p))

    def integrate(self, f, lo=-np.inf, hi=np.inf, points=(), with_error=False):
        a, b = self._preimage(lo, hi)
        forward = self.transform.forward
        value, error = 0.0, 0.0
        if self.base.has_density and b > a:
            value, error = quad_split(
                lambda x: f(float(forward(x))) * self.base.density(x),
                a,
                b,
                points=(-1.0, 0.0, 1.0) + self._pulled_points(points),
            )
        sizes, weights = self.atoms()
        inside = (sizes > lo) & (sizes <= hi)
        if np.any(inside):
            value += float(sum(f(s) * w for s, w in zip(sizes[inside], weights[inside])))
        return (value, error) if with_error else value

    def _laplace_quadrature(self, z):
        value = 0.0 + 0.0j
        hull = self.base.support()
        if hull is None:
            return value
        forward = self.transform.forward
        if self.base.has_density:

            def integrand(x):
                y = float(forward(x))
                if abs(y) <= 1.0:
                    inner = complex(exp_minus_linear(z * y))
                else:
                    inner = np.exp(z * y) - 1.0
                return inner * self.base.density(x)

            value, _ = quad_split_complex(
                integrand, hull[0], hull[1], points=(-1.0, 0.0, 1.0) + self._pulled_points(())
            )
        sizes, weights = self.atoms()
        for s, w in zip(sizes, weights):
            value += w * (np.exp(z * s) - 1.0 - (z * s if abs(s) <= 1.0 else 0.0))
        return value

    def tail_finite(self, p, side):
        kind, base = self.transform.kind, self.base
        hull = base.support() or (0.0, 0.0)
        if kind == "expm1":
            return side == "left" or p <= 0 or hull[1] < np.inf
        if kind == "log1p":
            if side == "right":
                return p <= 0 or base.power_tail_finite(p)
            return p >= 0 or hull[0] > -1.0
        if kind == "mmm_jump":
            grows_right = self.transform.a < 0
            if (side == "right") == grows_right:
                return p * (1.0 if side == "right" else -1.0) <= 0 or hull[1] < np.inf
            return True
        if side == "right" and self.transform.a < 0 and p > 0:
            return base.tail_finite(p, "right")
        return True

    def power_tail_finite(self, p):
        kind = self.transform.kind
        if kind == "expm1" or (kind == "mmm_jump" and self.transform.a < 0):
            return self.base.tail_finite(p, "right")
        return True

    def small_moment_finite(self, beta):
        return self.base.small_moment_finite(beta)

    @property
    def finite_activity(self):
        return self.base.finite_activity

    @property
    def s1_alpha(self):
        return self.base.s1_alpha

    @property
    def s2_alpha(self):
        return self.base.s2_alpha

    def image(self, transform):
        if self.transform.inverts(transform):
            return self.base
        return Image(self, transform)
