"""Compactly supported symmetric kernels and their moment functionals.

Every kernel integrates to one over ``[-support, support]``.  Bandwidth
scaling follows the usual convention ``K_h(u) = K(u / h) / h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import BandwidthError, ConfigError

FAMILIES = ("epanechnikov", "quartic", "triweight", "truncated-gaussian")

# K(u) = c (1 - u^2)^p on [-1, 1]
_POLY_FAMILIES = {
    "epanechnikov": (0.75, 1),
    "quartic": (15.0 / 16.0, 2),
    "triweight": (35.0 / 32.0, 3),
}

GAUSS_TRUNCATION = 4.0
MAX_MOMENT = 4


def _gauss_norm(c):
    # integral over [-c, c] of (phi(u) - phi(c))
    return math.erf(c / math.sqrt(2.0)) - 2.0 * c * _phi(c)


def _phi(u):
    return math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric, Lipschitz kernel with compact support.

    The truncated Gaussian is shifted down by its value at the cut-off
    before renormalizing, so it is continuous (hence Lipschitz) at the
    edge of its support.
    """

    family: str = "epanechnikov"
    support_halfwidth: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        if not self.support_halfwidth > 0:
            raise ConfigError("support_halfwidth must be positive")
        if self.family in _POLY_FAMILIES and self.support_halfwidth != 1.0:
            raise ConfigError(f"{self.family} kernel has support halfwidth 1")

    @classmethod
    def from_name(cls, name: str) -> "KernelSpec":
        if name == "truncated-gaussian":
            return cls(name, GAUSS_TRUNCATION)
        return cls(name)

    @property
    def support(self) -> float:
        return self.support_halfwidth

    @property
    def lipschitz_constant(self) -> float:
        """Supremum of ``|K'(u)|`` over the support."""
        if self.family == "epanechnikov":
            return 1.5
        if self.family == "quartic":
            u = 1.0 / math.sqrt(3.0)
            return 15.0 / 4.0 * u * (1.0 - u * u)
        if self.family == "triweight":
            u = 1.0 / math.sqrt(5.0)
            return 35.0 / 32.0 * 6.0 * u * (1.0 - u * u) ** 2
        c = self.support_halfwidth
        # |phi'(u)| = |u| phi(u) peaks at u = 1
        return _phi(1.0) / _gauss_norm(c) if c >= 1.0 else c * _phi(c) / _gauss_norm(c)

    def __call__(self, u):
        return evaluate(self, u)

    def scaled(self, h, u):
        return eval_scaled(self, h, u)

    def moment(self, k: int) -> float:
        return moment(self, k)

    def sq_moment(self, k: int) -> float:
        return sq_moment(self, k)


def evaluate(spec: KernelSpec, u):
    """Evaluate ``K(u)``; accepts scalars or arrays, zero outside the support."""
    arr = np.asarray(u, dtype=float)
    a = np.abs(arr)
    if spec.family in _POLY_FAMILIES:
        c, p = _POLY_FAMILIES[spec.family]
        val = c * (1.0 - a * a) ** p
        out = np.where(a <= 1.0, val, 0.0)
    else:
        cut = spec.support_halfwidth
        val = (np.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi) - _phi(cut)) / _gauss_norm(cut)
        out = np.where(a <= cut, val, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def eval_scaled(spec: KernelSpec, h: float, u):
    """Bandwidth-scaled kernel ``K(u / h) / h``."""
    if not h > 0:
        raise BandwidthError(f"bandwidth must be positive, got {h!r}")
    return evaluate(spec, np.asarray(u, dtype=float) / h) / h


def _check_order(k):
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= MAX_MOMENT):
        raise ConfigError(f"moment order must be an integer in [0, {MAX_MOMENT}], got {k!r}")


def _poly_integral(k, m):
    # int_{-1}^{1} u^k (1 - u^2)^m du for even k
    return special.beta((k + 1) / 2.0, m + 1.0)


def quadrature_moment(spec: KernelSpec, k: int, power: int = 1) -> float:
    """``int u^k K(u)^power du`` by adaptive quadrature."""
    s = spec.support_halfwidth
    val, _ = integrate.quad(
        lambda x: x**k * evaluate(spec, x) ** power, -s, s, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return val


@lru_cache(maxsize=None)
def moment(spec: KernelSpec, k: int) -> float:
    """``mu_k = int u^k K(u) du``; exactly zero for odd ``k``."""
    _check_order(k)
    if k % 2:
        return 0.0
    if spec.family in _POLY_FAMILIES:
        c, p = _POLY_FAMILIES[spec.family]
        return c * _poly_integral(k, p)
    return quadrature_moment(spec, k)


@lru_cache(maxsize=None)
def sq_moment(spec: KernelSpec, k: int) -> float:
    """``nu_k = int u^k K(u)^2 du``; exactly zero for odd ``k``."""
    _check_order(k)
    if k % 2:
        return 0.0
    if spec.family in _POLY_FAMILIES:
        c, p = _POLY_FAMILIES[spec.family]
        return c * c * _poly_integral(k, 2 * p)
    return quadrature_moment(spec, k, power=2)
