"""Adaptive quadrature helpers shared by the measure families.

All integrals go through scipy's QUADPACK wrapper (adaptive Gauss-Kronrod). Domains are
split at user supplied break points, typically 0 and +-1 where Levy densities are singular
or where the truncation function jumps.
"""

import logging
import warnings

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate
from scipy.integrate import IntegrationWarning

from exceptions import QuadratureFailure
from utils import QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT

logger = logging.getLogger(__name__)

# accepted accuracy when QUADPACK reports trouble
FAILURE_ABS = 1e-8
FAILURE_REL = 1e-7


def split_points(lo, hi, points):
    """Sorted break points strictly inside (lo, hi), endpoints included"""
    inner = sorted({float(p) for p in points if lo < p < hi})
    return [lo] + inner + [hi]


def quad_split(f, lo, hi, points=(), epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT):
    """Integrate a real function over [lo, hi] piecewise between break points.

    :param f: real callable of one float
    :param lo: lower bound, may be -inf
    :param hi: upper bound, may be +inf
    :param points: break points, those outside (lo, hi) are ignored
    :return: (value, absolute error estimate)
    """
    if hi <= lo:
        return 0.0, 0.0
    total, error = 0.0, 0.0
    edges = split_points(lo, hi, points)
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IntegrationWarning)
            try:
                value, abserr = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise QuadratureFailure(
                    "quadrature on [{}, {}] failed: {}".format(a, b, exc)
                ) from exc
        if not np.isfinite(value):
            raise QuadratureFailure("non-finite integral on [{}, {}]".format(a, b))
        if caught and abserr > max(FAILURE_ABS, FAILURE_REL * abs(value)):
            raise QuadratureFailure(
                "tolerance unreachable on [{}, {}]: error {:.3e} for value {:.6e} ({})".format(
                    a, b, abserr, value, caught[-1].message
                )
            )
        if caught:
            logger.debug("accepted quadrature on [%s, %s] with warning: %s", a, b, caught[-1].message)
        total += value
        error += abserr
    return total, error


def quad_split_complex(f, lo, hi, points=(), **kwargs):
    """Complex-valued counterpart of quad_split, real and imaginary parts done separately"""
    re, re_err = quad_split(lambda x: f(x).real, lo, hi, points, **kwargs)
    im, im_err = quad_split(lambda x: f(x).imag, lo, hi, points, **kwargs)
    return complex(re, im), re_err + im_err


class ChebyshevCache:
    """Chebyshev interpolant of a complex function of a real argument on [0, upper].

    Used for exponents without a closed form: the expensive function is evaluated once on
    Chebyshev nodes and the interpolant answers every later query. Negative arguments use
    the conjugate symmetry f(-u) = conj(f(u)). Arguments beyond ``upper`` fall back to
    direct evaluation.
    """

    def __init__(self, func, upper, degree):
        self.func = func
        self.upper = float(upper)
        scalar = np.vectorize(lambda u: complex(func(u)), otypes=[complex])
        self._real = chebyshev.Chebyshev.interpolate(
            lambda u: scalar(u).real, degree, domain=[0.0, self.upper]
        )
        self._imag = chebyshev.Chebyshev.interpolate(
            lambda u: scalar(u).imag, degree, domain=[0.0, self.upper]
        )

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        flat = np.abs(u).ravel()
        values = self._real(flat) + 1j * self._imag(flat)
        outside = flat > self.upper
        if np.any(outside):
            values[outside] = [complex(self.func(v)) for v in flat[outside]]
        values = np.where(u.ravel() < 0, np.conj(values), values)
        return values.reshape(u.shape)
