"""Local linear weighted least-squares estimation of the seasonal curves.

At a target time ``t`` the estimator minimizes

    sum_i || Y_i - A a - (t_i - t) A b ||^2 K_h(t_i - t)

over ``(a, b)``.  Because ``A`` is square and invertible the minimizer
decouples into scalar kernel moments ``S_k`` and weighted responses
``T_k``, giving ``theta_hat = A^{-1} sum_i w_i Y_i`` with equivalent
kernel weights ``w_i``.  All sums over ``i`` use ``math.fsum`` in a fixed
order, so results do not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import BandwidthError, ConfigError, DegenerateWindow, DomainError
from .kernel import KernelSpec, eval_scaled, moment
from .model import CurveSet, SeasonalPanel, build_design, theta_second_derivative, time_grid

MIN_WINDOW_POINTS = 3


@dataclass(frozen=True)
class FitConfig:
    kernel: KernelSpec
    h: float
    min_denominator: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.h <= 1.0):
            raise BandwidthError(f"bandwidth must lie in (0, 1], got {self.h!r}")
        if not self.min_denominator > 0:
            raise ConfigError("min_denominator must be positive")


@dataclass(frozen=True)
class FitResult:
    t: float
    theta_hat: np.ndarray
    theta_prime_hat: np.ndarray
    s_moments: tuple
    denominator: float

    @property
    def d(self) -> int:
        return self.theta_hat.shape[0]

    @property
    def alpha_hat(self) -> float:
        return float(self.theta_hat[0])

    @property
    def betas_hat(self) -> np.ndarray:
        """All ``d`` seasonal estimates, the last one completed by the constraint."""
        return _complete(self.theta_hat)

    @property
    def alpha_prime_hat(self) -> float:
        return float(self.theta_prime_hat[0])

    @property
    def betas_prime_hat(self) -> np.ndarray:
        return _complete(self.theta_prime_hat)


def _complete(theta):
    b = theta[1:]
    return np.append(b, -math.fsum(b))


def rule_of_thumb_bandwidth(n: int, c: float = 1.0) -> float:
    """``c * n^(-1/5)``; offered as a starting point, never applied implicitly."""
    if n < 1:
        raise ValueError("n must be positive")
    return c * n ** (-0.2)


def _check_t(t):
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"t must lie in [0, 1], got {t!r}", )


@dataclass(frozen=True)
class _Window:
    idx: np.ndarray  # grid indices with nonzero kernel weight
    dt: np.ndarray  # t_i - t on the window
    kh: np.ndarray  # K_h(t_i - t) on the window
    n: int

    def s(self, k: int) -> float:
        return math.fsum(self.dt**k * self.kh) / self.n


def _window(n: int, cfg: FitConfig, t: float) -> _Window:
    _check_t(t)
    dt = time_grid(n) - t
    reach = cfg.h * cfg.kernel.support_halfwidth
    idx = np.nonzero(np.abs(dt) <= reach)[0]
    kh = np.asarray(eval_scaled(cfg.kernel, cfg.h, dt[idx]), dtype=float)
    keep = kh > 0
    return _Window(idx[keep], dt[idx][keep], kh[keep], n)


def s_moment(panel: SeasonalPanel, cfg: FitConfig, t: float, k: int) -> float:
    """``n^{-1} sum_i (t_i - t)^k K_h(t_i - t)``."""
    return _window(panel.n, cfg, t).s(k)


def t_moment(panel: SeasonalPanel, cfg: FitConfig, t: float, k: int) -> np.ndarray:
    """``n^{-1} sum_i (t_i - t)^k K_h(t_i - t) Y_i`` as a length-``d`` vector."""
    w = _window(panel.n, cfg, t)
    coef = w.dt**k * w.kh
    y = panel.y[w.idx]
    return np.array([math.fsum(coef * y[:, j]) for j in range(panel.d)]) / panel.n


@dataclass(frozen=True)
class LocalWeights:
    """Equivalent kernel weights for level and slope at one target time."""

    t: float
    level: np.ndarray  # length n, sums to one
    slope: np.ndarray  # length n
    s_moments: tuple
    denominator: float


def local_weights(n: int, cfg: FitConfig, t: float) -> LocalWeights:
    """Weights ``w_i`` such that ``theta_hat = A^{-1} sum_i w_i Y_i``.

    Raises ``DegenerateWindow`` when fewer than three grid points carry
    kernel mass or ``S_0 S_2 - S_1^2`` falls below ``cfg.min_denominator``.
    """
    win = _window(n, cfg, t)
    if win.idx.size < MIN_WINDOW_POINTS:
        raise DegenerateWindow(
            f"DegenerateWindow: only {win.idx.size} grid point(s) inside the kernel "
            f"window at t={t} (h={cfg.h}, n={n}); need {MIN_WINDOW_POINTS}",
            t=t,
        )
    s = tuple(win.s(k) for k in range(4))
    den = s[0] * s[2] - s[1] * s[1]
    if not den > cfg.min_denominator:
        raise DegenerateWindow(
            f"DegenerateWindow: S0*S2 - S1^2 = {den:.3e} <= {cfg.min_denominator:g} at t={t}",
            t=t,
        )
    level = np.zeros(n)
    slope = np.zeros(n)
    scale = n * den
    level[win.idx] = (s[2] - s[1] * win.dt) * win.kh / scale
    slope[win.idx] = (s[0] * win.dt - s[1]) * win.kh / scale
    return LocalWeights(t, level, slope, s, den)


def weights(panel: SeasonalPanel, cfg: FitConfig, t: float) -> np.ndarray:
    """The ``n`` equivalent kernel weights ``S_i(t)``."""
    return local_weights(panel.n, cfg, t).level


def _weighted_sum(w, y):
    nz = np.nonzero(w)[0]
    wn, yn = w[nz], y[nz]
    return np.array([math.fsum(wn * yn[:, j]) for j in range(y.shape[1])])


def fit_at(panel: SeasonalPanel, cfg: FitConfig, t: float) -> FitResult:
    """Local linear estimate of ``theta(t)`` and ``theta'(t)``."""
    lw = local_weights(panel.n, cfg, t)
    A_inv = build_design(panel.d).A_inv
    theta = A_inv @ _weighted_sum(lw.level, panel.y)
    theta_prime = A_inv @ _weighted_sum(lw.slope, panel.y)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(theta_prime))):
        raise DegenerateWindow(f"DegenerateWindow: non-finite estimate at t={t}", t=t)
    return FitResult(float(t), theta, theta_prime, lw.s_moments, lw.denominator)


def fit_grid(panel: SeasonalPanel, cfg: FitConfig, grid: Sequence[float]) -> List[FitResult]:
    """``fit_at`` over a list of target times.

    A failure at one point is re-raised with that point attached as ``.t``.
    """
    out = []
    for t in grid:
        try:
            out.append(fit_at(panel, cfg, float(t)))
        except DegenerateWindow as exc:
            exc.t = float(t)
            raise
        except DomainError as exc:
            raise DomainError(f"{exc} (grid point t={t})") from exc
    return out


def theoretical_bias(c: CurveSet, cfg: FitConfig, t: float) -> np.ndarray:
    """Leading interior bias ``h^2 mu_2 theta''(t) / 2``."""
    if not c.has_second_derivatives:
        raise ConfigError("curve set does not provide second derivatives")
    reach = cfg.h * cfg.kernel.support_halfwidth
    if min(t, 1.0 - t) < reach:
        raise DomainError(f"t={t} is within h*support={reach} of the boundary")
    return 0.5 * cfg.h**2 * moment(cfg.kernel, 2) * theta_second_derivative(c, t)
