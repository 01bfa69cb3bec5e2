"""Stationary weakly dependent error processes with analytic second moments.

Three families are provided, all mean zero with innovation covariance
``sigma_eps``:

* ``iid``   - ``e_t = eps_t``
* ``vma_q`` - ``e_t = eps_t + Theta_1 eps_{t-1} + ... + Theta_q eps_{t-q}``
  (q-dependent, so dependence coefficients vanish beyond lag q)
* ``var_1`` - ``e_t = Phi e_{t-1} + eps_t`` with spectral radius of Phi
  below one (geometric decay)

Autocovariances follow ``R(k) = Cov(e_{t+k}, e_t) = E[e_{t+k} e_t']`` so
that ``R(-k) = R(k)'``; the long-run covariance is
``Sigma_0 = R(0) + sum_{k>=1} (R(k) + R(k)')``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionError, SpecError, SummabilityError
from .rng import make_generator, rademacher, standard_normal

VARIANTS = ("iid", "vma_q", "var_1")
LAWS = ("gaussian", "rademacher-scaled")
SPD_TOL = 1e-10
RADIUS_MARGIN = 1e-6
# moment exponent zeta in E|e|^{2+zeta}; both laws have all moments
ZETA = 1.0


def _as_matrix(x, d, name):
    m = np.asarray(x, dtype=float)
    if m.ndim == 0:
        m = float(m) * np.eye(d)
    if m.shape != (d, d):
        raise SpecError(f"{name} must be {d}x{d}, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class ErrorProcessSpec:
    variant: str
    d: int
    sigma_eps: np.ndarray
    thetas: tuple = ()
    phi: Optional[np.ndarray] = None
    innovation_law: str = "gaussian"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SpecError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.innovation_law not in LAWS:
            raise SpecError(f"unknown innovation law {self.innovation_law!r}")
        if int(self.d) < 1:
            raise DimensionError(f"d must be positive, got {self.d}")
        object.__setattr__(self, "sigma_eps", _as_matrix(self.sigma_eps, self.d, "sigma_eps"))
        object.__setattr__(
            self, "thetas", tuple(_as_matrix(t, self.d, "theta") for t in self.thetas)
        )
        if self.variant == "var_1":
            if self.phi is None:
                raise SpecError("var_1 requires phi")
            object.__setattr__(self, "phi", _as_matrix(self.phi, self.d, "phi"))
        if self.variant == "vma_q" and not self.thetas:
            raise SpecError("vma_q requires at least one coefficient matrix")

    # constructors -------------------------------------------------------
    @classmethod
    def iid(cls, sigma_eps, d=None, law="gaussian"):
        d = d or np.atleast_2d(sigma_eps).shape[0]
        return cls("iid", d, sigma_eps, innovation_law=law)

    @classmethod
    def vma(cls, thetas, sigma_eps, d=None, law="gaussian"):
        d = d or np.atleast_2d(sigma_eps).shape[0]
        return cls("vma_q", d, sigma_eps, thetas=tuple(thetas), innovation_law=law)

    @classmethod
    def var1(cls, phi, sigma_eps, d=None, law="gaussian"):
        d = d or np.atleast_2d(sigma_eps).shape[0]
        return cls("var_1", d, sigma_eps, phi=phi, innovation_law=law)

    @property
    def q(self) -> int:
        return len(self.thetas)

    def spectral_radius(self) -> float:
        if self.variant != "var_1":
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.phi))))

    def validate(self) -> None:
        s = self.sigma_eps
        if not np.allclose(s, s.T, rtol=0, atol=1e-12):
            raise SpecError("sigma_eps must be symmetric")
        lo = np.linalg.eigvalsh(s).min()
        if lo <= SPD_TOL:
            raise SpecError(f"sigma_eps is not positive definite (min eigenvalue {lo:.3e})")
        if self.variant == "var_1":
            rho = self.spectral_radius()
            if rho >= 1.0 - RADIUS_MARGIN:
                raise SpecError(f"spectral radius of phi is {rho:.6g}; need < 1")

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "variant": self.variant,
            "d": int(self.d),
            "sigma_eps": self.sigma_eps.tolist(),
            "innovation_law": self.innovation_law,
        }
        if self.variant == "vma_q":
            out["thetas"] = [t.tolist() for t in self.thetas]
        if self.variant == "var_1":
            out["phi"] = self.phi.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ErrorProcessSpec":
        allowed = {"variant", "d", "sigma_eps", "thetas", "phi", "innovation_law"}
        unknown = set(data) - allowed
        if unknown:
            raise SpecError(f"unknown error-spec keys: {sorted(unknown)}")
        try:
            variant = data["variant"]
            d = int(data["d"])
            sigma = data["sigma_eps"]
        except KeyError as exc:
            raise SpecError(f"error spec missing key {exc}") from None
        if variant != "vma_q" and "thetas" in data:
            raise SpecError("thetas is only valid for vma_q")
        if variant != "var_1" and "phi" in data:
            raise SpecError("phi is only valid for var_1")
        return cls(
            variant,
            d,
            sigma,
            thetas=tuple(data.get("thetas", ())),
            phi=data.get("phi"),
            innovation_law=data.get("innovation_law", "gaussian"),
        )


# analytic second moments ------------------------------------------------

def _stationary_cov(spec):
    # R(0) = sum_j Phi^j Sigma Phi'^j, accumulated by doubling
    if "r0" not in spec._cache:
        if spec.spectral_radius() >= 1.0:
            raise SummabilityError("var_1 with spectral radius >= 1 has no stationary law")
        r = spec.sigma_eps.copy()
        p = spec.phi.copy()
        for _ in range(200):
            r = r + p @ r @ p.T
            p = p @ p
            if np.max(np.abs(p)) < 1e-18:
                break
        spec._cache["r0"] = 0.5 * (r + r.T)
    return spec._cache["r0"]


def autocov(spec: ErrorProcessSpec, k: int) -> np.ndarray:
    """Analytic ``R(k) = E[e_{t+k} e_t']``; negative lags give ``R(-k)'``."""
    if k < 0:
        return autocov(spec, -k).T
    d = spec.d
    if spec.variant == "iid":
        return spec.sigma_eps.copy() if k == 0 else np.zeros((d, d))
    if spec.variant == "vma_q":
        coefs = (np.eye(d),) + spec.thetas
        if k > spec.q:
            return np.zeros((d, d))
        return sum(coefs[s + k] @ spec.sigma_eps @ coefs[s].T for s in range(spec.q + 1 - k))
    return np.linalg.matrix_power(spec.phi, k) @ _stationary_cov(spec)


@dataclass(frozen=True)
class DependenceBound:
    """Upper bound ``r -> constant * rate**r`` (or a finite table) on ``max|R(r)|``.

    ``kind`` records which weak-dependence notion the family is the
    stock example of; the bound itself is on covariances and serves
    either.
    """

    kind: str
    constant: float
    rate: float
    table: tuple = ()
    summable: bool = True

    def bound_at(self, r: int) -> float:
        if r < 0:
            raise ValueError("lag must be non-negative")
        if self.table:
            return self.table[r] if r < len(self.table) else 0.0
        return self.constant * self.rate**r

    def tail_sum(self, start: int) -> float:
        """``sum_{r >= start} bound_at(r)``."""
        if self.table:
            return float(sum(self.table[start:]))
        if self.rate >= 1.0:
            return math.inf
        return self.constant * self.rate**start / (1.0 - self.rate)


def _geometric_constant(phi, rho):
    # ||Phi^r||_2 <= C rate^r
    vals, vecs = np.linalg.eig(phi)
    cond = np.linalg.cond(vecs)
    if np.isfinite(cond) and cond < 1e8 and rho > 0:
        return float(cond), rho
    rate = 0.5 * (1.0 + rho) if rho > 0 else 0.5
    best, p, r = 1.0, np.eye(phi.shape[0]), 0
    while r < 100000:
        r += 1
        p = p @ phi
        ratio = np.linalg.norm(p, 2) / rate**r
        best = max(best, ratio)
        if ratio < 1e-6 * best and r > 10:
            break
    return float(best), rate


def dependence_bound_of(spec: ErrorProcessSpec) -> DependenceBound:
    if "bound" in spec._cache:
        return spec._cache["bound"]
    if spec.variant == "iid":
        b = DependenceBound("kappa", 0.0, 0.0, table=(float(np.max(np.abs(spec.sigma_eps))),))
    elif spec.variant == "vma_q":
        norms = [float(np.max(np.abs(autocov(spec, k)))) for k in range(spec.q + 1)]
        # running max from the right keeps the table non-increasing
        table = tuple(max(norms[k:]) for k in range(len(norms)))
        b = DependenceBound("kappa", 0.0, 0.0, table=table)
    else:
        rho = spec.spectral_radius()
        if rho >= 1.0:
            b = DependenceBound("lambda", math.inf, rho, summable=False)
        else:
            c, rate = _geometric_constant(spec.phi, rho)
            r0 = np.linalg.norm(_stationary_cov(spec), 2)
            b = DependenceBound("lambda", c * r0, rate)
    spec._cache["bound"] = b
    return b


def dependence_bound(spec: ErrorProcessSpec, r: int) -> float:
    """Bound on ``max_{jm} |R(r)_{jm}|`` at lag ``r``."""
    return dependence_bound_of(spec).bound_at(r)


def longrun_sigma0(spec: ErrorProcessSpec, tol: float = 1e-12) -> np.ndarray:
    """Long-run covariance ``R(0) + sum_{k>=1} (R(k) + R(k)')``.

    For ``var_1`` the sum is truncated at the first lag whose analytic
    tail bound ``2 C rate^{K+1} / (1 - rate)`` drops below ``tol``.
    """
    bound = dependence_bound_of(spec)
    if not bound.summable:
        raise SummabilityError("dependence bound is not summable; Sigma_0 is undefined")
    if spec.variant == "var_1":
        lag = 0
        while 2.0 * bound.tail_sum(lag + 1) >= tol:
            lag += 1
    else:
        lag = spec.q if spec.variant == "vma_q" else 0
    r0 = autocov(spec, 0)
    total = r0.copy()
    if spec.variant == "var_1":
        rk = r0
        for _ in range(lag):
            rk = spec.phi @ rk
            total += rk + rk.T
    else:
        for k in range(1, lag + 1):
            rk = autocov(spec, k)
            total += rk + rk.T
    return 0.5 * (total + total.T)


def empirical_autocov(sample, k: int) -> np.ndarray:
    """``(n-k)^{-1} sum_i e_{i+k} e_i'`` without mean subtraction."""
    e = np.asarray(sample, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    n = e.shape[0]
    if not 0 <= k < n:
        raise DimensionError(f"lag k={k} must satisfy 0 <= k < n={n}")
    return e[k:].T @ e[: n - k] / (n - k)


# simulation -------------------------------------------------------------

def _burn_in(spec):
    rho = spec.spectral_radius()
    if rho <= 0.0:
        return 200
    return max(200, int(math.ceil(50.0 / -math.log(rho))))


def _mix(z, m):
    # z @ m.T with a fixed accumulation order
    out = z[..., 0:1] * m[:, 0]
    for j in range(1, m.shape[1]):
        out = out + z[..., j : j + 1] * m[:, j]
    return out


def _unit_draws(gen, law, size):
    if law == "gaussian":
        return standard_normal(gen, size)
    return rademacher(gen, size)


def _draw_one(spec, n, seed):
    gen = make_generator(seed)
    d = spec.d
    chol = np.linalg.cholesky(spec.sigma_eps)
    if spec.variant == "iid":
        return _mix(_unit_draws(gen, spec.innovation_law, n * d).reshape(n, d), chol), None
    if spec.variant == "vma_q":
        m = n + spec.q
        return _mix(_unit_draws(gen, spec.innovation_law, m * d).reshape(m, d), chol), None
    if spec.innovation_law == "gaussian":
        z = standard_normal(gen, (n + 1) * d).reshape(n + 1, d)
        start = _mix(z[0], np.linalg.cholesky(_stationary_cov(spec)))
        return _mix(z[1:], chol), start
    burn = _burn_in(spec)
    z = rademacher(gen, (n + burn) * d).reshape(n + burn, d)
    return _mix(z, chol), np.zeros(d)


def simulate_many(spec: ErrorProcessSpec, n: int, seeds: Iterable[int]) -> np.ndarray:
    """Independent paths, one per seed, stacked as ``(len(seeds), n, d)``.

    Row ``r`` is identical to ``simulate(spec, n, seeds[r])``.
    """
    spec.validate()
    if n < 1:
        raise DimensionError(f"n must be positive, got {n}")
    draws = [_draw_one(spec, n, s) for s in seeds]
    if not draws:
        return np.zeros((0, n, spec.d))
    eps = np.stack([dr[0] for dr in draws])
    if spec.variant == "iid":
        return eps
    if spec.variant == "vma_q":
        q = spec.q
        out = eps[:, q:].copy()
        for s, theta in enumerate(spec.thetas, start=1):
            out = out + _mix(eps[:, q - s : q - s + n], theta)
        return out
    phi = spec.phi
    prev = np.stack([dr[1] for dr in draws])
    steps = eps.shape[1]
    path = np.empty_like(eps)
    for i in range(steps):
        prev = _mix(prev, phi) + eps[:, i]
        path[:, i] = prev
    return path[:, steps - n :]


def simulate(spec: ErrorProcessSpec, n: int, seed: int) -> np.ndarray:
    """One stationary path ``e_1..e_n`` as an ``n x d`` matrix."""
    return simulate_many(spec, n, [seed])[0]
