import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import special

from exceptions import ConfigError, ModelError

logger = logging.getLogger(__name__)

# Gauss-Jacobi nodes for the power call coefficients
POWER_NODES = 1024


class PayoffKind(Enum):
    CALL = "call"
    PUT = "put"
    POWER_CALL = "power_call"
    BINARY = "binary"
    LINEAR = "linear"
    CONSTANT = "constant"
    LOG = "log"
    COMBINATION = "combination"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Payoff:
    """
    European payoff g(S_T) with its regularity class.

    Params

      - ``kind``: PayoffKind
      - ``strike``: K for call, put, power call and binary
      - ``power``: exponent of the power call
      - ``constant``: level of the constant payoff
      - ``holder_eta``: Hölder exponent of g, None when g is not Hölder on (0, ∞)
      - ``sobolev_q``: smallest q with g' in L_q(0, ∞) for every q' >= q, None when unknown
      - ``growth``: order p of the bound |g(y)| <= c(1 + y^p)
    """

    kind: PayoffKind
    strike: float = 0.0
    power: float = 1.0
    constant: float = 0.0
    holder_eta: Optional[float] = None
    sobolev_q: Optional[float] = None
    growth: float = 1.0
    fn: Optional[Callable] = None
    components: tuple = ()

    @classmethod
    def call(cls, strike):
        return cls(PayoffKind.CALL, strike=float(strike), holder_eta=1.0, sobolev_q=np.inf, growth=1.0)

    @classmethod
    def put(cls, strike):
        return cls(PayoffKind.PUT, strike=float(strike), holder_eta=1.0, sobolev_q=1.0, growth=0.0)

    @classmethod
    def power_call(cls, strike, power):
        if not 0.0 < power <= 1.0:
            raise ModelError("power call exponent must lie in (0, 1]")
        return cls(PayoffKind.POWER_CALL, strike=float(strike), power=float(power), holder_eta=float(power), growth=float(power))

    @classmethod
    def binary(cls, strike):
        return cls(PayoffKind.BINARY, strike=float(strike), holder_eta=0.0, growth=0.0)

    @classmethod
    def linear(cls):
        return cls(PayoffKind.LINEAR, holder_eta=1.0, sobolev_q=np.inf, growth=1.0)

    @classmethod
    def constant_payoff(cls, c):
        return cls(PayoffKind.CONSTANT, constant=float(c), holder_eta=1.0, sobolev_q=1.0, growth=0.0)

    @classmethod
    def log(cls):
        return cls(PayoffKind.LOG, growth=0.0)

    @classmethod
    def custom(cls, fn, holder_eta=None, sobolev_q=None, growth=1.0):
        return cls(PayoffKind.CUSTOM, fn=fn, holder_eta=holder_eta, sobolev_q=sobolev_q, growth=growth)

    @classmethod
    def combination(cls, pairs):
        """Linear combination sum of weight·payoff"""
        pairs = tuple((float(w), p) for w, p in pairs)
        etas = [p.holder_eta for _, p in pairs]
        holder = None if any(e is None for e in etas) else min(etas)
        qs = [p.sobolev_q for _, p in pairs if p.kind is not PayoffKind.CONSTANT]
        sobolev = None if any(q is None for q in qs) else max(qs, default=1.0)
        growth = max(p.growth for _, p in pairs)
        return cls(PayoffKind.COMBINATION, holder_eta=holder, sobolev_q=sobolev, growth=growth, components=pairs)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        kind = self.kind
        if kind is PayoffKind.CALL:
            return np.maximum(y - self.strike, 0.0)
        if kind is PayoffKind.PUT:
            return np.maximum(self.strike - y, 0.0)
        if kind is PayoffKind.POWER_CALL:
            return np.maximum(y - self.strike, 0.0) ** self.power
        if kind is PayoffKind.BINARY:
            return (y >= self.strike).astype(float)
        if kind is PayoffKind.LINEAR:
            return y.copy()
        if kind is PayoffKind.CONSTANT:
            return np.full_like(y, self.constant)
        if kind is PayoffKind.LOG:
            return np.log(y)
        if kind is PayoffKind.COMBINATION:
            return sum(w * p(y) for w, p in self.components)
        return np.asarray(self.fn(y), dtype=float)

    @property
    def cos_available(self):
        """Fourier-cosine coefficients are known for every built-in kind"""
        if self.kind is PayoffKind.COMBINATION:
            return all(p.cos_available for _, p in self.components)
        return self.kind is not PayoffKind.CUSTOM

    def in_sobolev(self, q):
        """g' in L_q(0, ∞), as declared by ``sobolev_q``"""
        if self.kind is PayoffKind.CONSTANT:
            return True
        if self.kind is PayoffKind.COMBINATION:
            return all(p.in_sobolev(q) for _, p in self.components)
        return self.sobolev_q is not None and q >= self.sobolev_q

    def holder_ratio(self, rng, pairs=1000, scale=4.0):
        """max |g(x)-g(y)| / |x-y|^η over random pairs in (0, scale·(1+K)]"""
        if self.holder_eta is None:
            return np.inf
        top = scale * (1.0 + self.strike)
        x = rng.uniform(0.0, top, pairs) + 1e-9
        y = rng.uniform(0.0, top, pairs) + 1e-9
        gap = np.abs(x - y)
        keep = gap > 0
        ratio = np.abs(self(x) - self(y))[keep] / gap[keep] ** self.holder_eta
        return float(ratio.max()) if ratio.size else 0.0

    def cos_coefficients(self, x, a, b, u):
        """V_k(x) = ∫_a^b g(e^{x+s}) cos(u_k (s-a)) ds for log-prices x and frequencies u_k.

        :return: array of shape (len(x), len(u))
        """
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        u = np.asarray(u, dtype=float).reshape(1, -1)
        kind = self.kind
        lo = np.full_like(x, a)
        hi = np.full_like(x, b)
        if kind in (PayoffKind.CALL, PayoffKind.BINARY, PayoffKind.PUT, PayoffKind.POWER_CALL):
            cut = np.clip(np.log(self.strike) - x, a, b)
        if kind is PayoffKind.CALL:
            return np.exp(x) * _chi(cut, hi, a, u) - self.strike * _psi(cut, hi, a, u)
        if kind is PayoffKind.PUT:
            return self.strike * _psi(lo, cut, a, u) - np.exp(x) * _chi(lo, cut, a, u)
        if kind is PayoffKind.BINARY:
            return _psi(cut, hi, a, u)
        if kind is PayoffKind.LINEAR:
            return np.exp(x) * _chi(lo, hi, a, u)
        if kind is PayoffKind.CONSTANT:
            return self.constant * _psi(lo, hi, a, u)
        if kind is PayoffKind.LOG:
            return x * _psi(lo, hi, a, u) + _sigma(lo, hi, a, u)
        if kind is PayoffKind.POWER_CALL:
            return self._power_coefficients(x[:, 0], a, b, u[0])
        if kind is PayoffKind.COMBINATION:
            return sum(w * p.cos_coefficients(x[:, 0], a, b, u[0]) for w, p in self.components)
        raise ModelError("no Fourier-cosine coefficients for custom payoffs")

    def _power_coefficients(self, x, a, b, u):
        t, w = special.roots_jacobi(POWER_NODES, 0.0, self.power)
        tl, wl = np.polynomial.legendre.leggauss(POWER_NODES)
        out = np.zeros((len(x), len(u)))
        for i, cut in enumerate(np.log(self.strike) - x):
            if cut >= b:
                continue
            if cut >= a:
                # (e^{s-cut} - 1)^η = (s-cut)^η·smooth, the singular factor is the Jacobi weight
                half = 0.5 * (b - cut)
                d = half * (1.0 + t)
                ratio = np.where(d > 0, np.expm1(d) / np.where(d > 0, d, 1.0), 1.0)
                values = (self.strike * ratio) ** self.power
                out[i] = half ** (self.power + 1.0) * (np.cos(np.outer(u, cut + d - a)) @ (w * values))
            else:
                half = 0.5 * (b - a)
                s = a + half * (1.0 + tl)
                values = (self.strike * np.expm1(s - cut)) ** self.power
                out[i] = half * (np.cos(np.outer(u, s - a)) @ (wl * values))
        return out

    def to_dict(self):
        if self.kind is PayoffKind.COMBINATION:
            return {"kind": "combination", "components": [[w, p.to_dict()] for w, p in self.components]}
        out = {"kind": self.kind.value}
        if self.kind in (PayoffKind.CALL, PayoffKind.PUT, PayoffKind.POWER_CALL, PayoffKind.BINARY):
            out["strike"] = self.strike
        if self.kind is PayoffKind.POWER_CALL:
            out["power"] = self.power
        if self.kind is PayoffKind.CONSTANT:
            out["constant"] = self.constant
        return out

    @classmethod
    def from_dict(cls, spec, field="payoff"):
        kind = spec.get("kind")
        try:
            if kind == "call":
                return cls.call(spec["strike"])
            if kind == "put":
                return cls.put(spec["strike"])
            if kind == "power_call":
                return cls.power_call(spec["strike"], spec["power"])
            if kind == "binary":
                return cls.binary(spec["strike"])
            if kind == "linear":
                return cls.linear()
            if kind == "constant":
                return cls.constant_payoff(spec.get("constant", 1.0))
            if kind == "log":
                return cls.log()
            if kind == "combination":
                return cls.combination(
                    (w, cls.from_dict(p, "{}.components[{}]".format(field, i)))
                    for i, (w, p) in enumerate(spec["components"])
                )
        except KeyError as exc:
            raise ConfigError("{}.{}".format(field, exc.args[0]), "missing value") from exc
        raise ConfigError(field + ".kind", "unknown payoff kind {!r}".format(kind))


def _chi(c, d, a, u):
    """∫_c^d e^s cos(u(s-a)) ds"""
    c, d = np.broadcast_arrays(c, d)
    d = np.maximum(d, c)
    ud, uc = u * (d - a), u * (c - a)
    upper = np.exp(d) * (np.cos(ud) + u * np.sin(ud))
    lower = np.exp(c) * (np.cos(uc) + u * np.sin(uc))
    return (upper - lower) / (1.0 + u * u)


def _psi(c, d, a, u):
    """∫_c^d cos(u(s-a)) ds"""
    c, d = np.broadcast_arrays(c, d)
    d = np.maximum(d, c)
    safe = np.where(u == 0, 1.0, u)
    return np.where(u == 0, d - c, (np.sin(u * (d - a)) - np.sin(u * (c - a))) / safe)


def _sigma(c, d, a, u):
    """∫_c^d s cos(u(s-a)) ds"""
    c, d = np.broadcast_arrays(c, d)
    d = np.maximum(d, c)
    safe = np.where(u == 0, 1.0, u)

    def primitive(s):
        return s * np.sin(u * (s - a)) / safe + np.cos(u * (s - a)) / safe ** 2

    return np.where(u == 0, 0.5 * (d * d - c * c), primitive(d) - primitive(c))
