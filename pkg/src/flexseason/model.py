"""Flexible seasonal model: panel layout, design matrix and curve sets.

A panel holds ``n`` periods of ``d`` seasons observed on the grid
``t_i = i / n``.  The reduced parameter vector is
``theta(t) = (alpha(t), beta_1(t), ..., beta_{d-1}(t))`` and the season
means are ``A @ theta(t)``, with ``beta_d = -sum(beta_1..beta_{d-1})``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import ConstraintError, DimensionError, DomainError

CONSTRAINT_TOL = 1e-10
SYNTH_CONSTRAINT_TOL = 1e-8

Curve = Callable[[np.ndarray], np.ndarray]


def time_grid(n: int) -> np.ndarray:
    """The design points ``t_i = i / n`` for ``i = 1..n``."""
    return np.arange(1, n + 1, dtype=float) / n


@dataclass(frozen=True)
class SeasonalPanel:
    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.ndim != 2:
            raise DimensionError(f"panel must be a 2-d array, got shape {y.shape}")
        n, d = y.shape
        if d < 2:
            raise DimensionError(f"need at least 2 seasons, got d={d}")
        if n < 3:
            raise DimensionError(f"need at least 3 periods, got n={n}")
        if not np.all(np.isfinite(y)):
            raise ValueError("panel contains non-finite values")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]

    @property
    def t(self) -> np.ndarray:
        return time_grid(self.n)


@dataclass(frozen=True)
class DesignMatrix:
    d: int
    A: np.ndarray
    A_inv: np.ndarray


def _design_from_blocks(d):
    A = np.zeros((d, d))
    A[:, 0] = 1.0
    A[: d - 1, 1:] = np.eye(d - 1)
    A[d - 1, 1:] = -1.0
    return A


def _closed_form_inverse(d):
    # alpha = mean of the season values, beta_j = y_j - alpha
    inv = np.full((d, d), -1.0 / d)
    inv[0, :] = 1.0 / d
    inv[1:, : d - 1] += np.eye(d - 1)
    return inv


@lru_cache(maxsize=64)
def build_design(d: int) -> DesignMatrix:
    """Design matrix ``A`` for ``d`` seasons together with its inverse."""
    if d < 2:
        raise DimensionError(f"need d >= 2 seasons, got d={d}")
    A = _design_from_blocks(d)
    A_inv = _closed_form_inverse(d)
    A.setflags(write=False)
    A_inv.setflags(write=False)
    return DesignMatrix(d, A, A_inv)


@dataclass(frozen=True)
class CurveSet:
    """Trend and ``d`` seasonal effect curves on ``[0, 1]``.

    Curves must accept numpy arrays.  Second derivatives are optional and
    only needed for the theoretical bias.
    """

    alpha: Curve
    betas: Sequence[Curve]
    alpha_dd: Optional[Curve] = None
    betas_dd: Optional[Sequence[Curve]] = None
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(self.betas))
        if self.betas_dd is not None:
            object.__setattr__(self, "betas_dd", tuple(self.betas_dd))
            if len(self.betas_dd) != len(self.betas):
                raise DimensionError("betas_dd must have one entry per season")
        if len(self.betas) < 2:
            raise DimensionError(f"need at least 2 seasonal curves, got {len(self.betas)}")

    @property
    def d(self) -> int:
        return len(self.betas)

    @property
    def has_second_derivatives(self) -> bool:
        return self.alpha_dd is not None and self.betas_dd is not None

    def season_values(self, t) -> np.ndarray:
        """``beta_j(t)`` stacked as columns, shape ``(len(t), d)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.column_stack([np.broadcast_to(b(t), t.shape) for b in self.betas])

    def means(self, t) -> np.ndarray:
        """Season means ``alpha(t) + beta_j(t)``, shape ``(len(t), d)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.broadcast_to(self.alpha(t), t.shape)[:, None] + self.season_values(t)

    def constraint_residual(self, grid=None) -> float:
        """Largest ``|sum_j beta_j(t)|`` over ``grid`` (101 points by default)."""
        if grid is None:
            grid = np.linspace(0.0, 1.0, 101)
        return float(np.max(np.abs(self.season_values(grid).sum(axis=1))))

    def check_constraint(self, tol: float = CONSTRAINT_TOL, grid=None) -> None:
        resid = self.constraint_residual(grid)
        if resid > tol:
            raise ConstraintError(
                f"seasonal effects do not sum to zero (max residual {resid:.3e} > {tol:g})"
            )


def _check_unit_interval(t):
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)) or not np.all(np.isfinite(t)):
        raise DomainError(f"t must lie in [0, 1], got {t}")


def curves_to_theta(c: CurveSet, t: float) -> np.ndarray:
    """Reduced parameter vector ``(alpha, beta_1..beta_{d-1})`` at ``t``."""
    _check_unit_interval(t)
    tt = np.array([float(t)])
    out = np.empty(c.d)
    out[0] = np.broadcast_to(c.alpha(tt), (1,))[0]
    out[1:] = c.season_values(tt)[0, : c.d - 1]
    return out


def theta_second_derivative(c: CurveSet, t: float) -> np.ndarray:
    """``theta''(t)`` built from the curve set's analytic second derivatives."""
    tt = np.array([float(t)])
    out = np.empty(c.d)
    out[0] = np.broadcast_to(c.alpha_dd(tt), (1,))[0]
    for j in range(c.d - 1):
        out[j + 1] = np.broadcast_to(c.betas_dd[j](tt), (1,))[0]
    return out


@dataclass(frozen=True)
class TabulatedCurves:
    """Curves known only on a grid; ``as_curveset`` interpolates linearly."""

    t: np.ndarray
    alpha: np.ndarray
    betas: np.ndarray  # shape (len(t), d)

    @property
    def d(self) -> int:
        return self.betas.shape[1]

    def as_curveset(self) -> CurveSet:
        t = self.t

        def interp(values):
            return lambda x: np.interp(x, t, values)

        return CurveSet(
            interp(self.alpha),
            [interp(self.betas[:, j]) for j in range(self.d)],
            name="tabulated",
        )


def theta_to_curves(theta_grid: Mapping[float, Sequence[float]]) -> TabulatedCurves:
    """Expand reduced vectors into ``alpha`` and all ``d`` seasonal curves.

    The last seasonal curve is completed as minus the sum of the others,
    so the sum-to-zero constraint holds exactly at every grid point.
    """
    items = sorted((float(t), np.asarray(v, dtype=float)) for t, v in theta_grid.items())
    if not items:
        raise DimensionError("empty theta grid")
    lengths = {v.shape for _, v in items}
    if len(lengths) != 1 or items[0][1].ndim != 1:
        raise DimensionError(f"inconsistent theta vector shapes: {sorted(lengths)}")
    d = items[0][1].shape[0]
    if d < 2:
        raise DimensionError(f"theta vectors must have length >= 2, got {d}")
    ts = np.array([t for t, _ in items])
    mat = np.array([v for _, v in items])
    betas = np.empty((len(ts), d))
    betas[:, : d - 1] = mat[:, 1:]
    # sequential sum: a left-to-right sum over all d columns is then exactly 0
    betas[:, d - 1] = -np.cumsum(mat[:, 1:], axis=1)[:, -1]
    return TabulatedCurves(ts, mat[:, 0].copy(), betas)


def synthesize_panel(c: CurveSet, errors) -> SeasonalPanel:
    """``y_ij = alpha(i/n) + beta_j(i/n) + e_ij`` for an ``n x d`` error matrix."""
    e = np.asarray(errors, dtype=float)
    if e.ndim != 2 or e.shape[1] != c.d:
        raise DimensionError(f"errors must have shape (n, {c.d}), got {e.shape}")
    c.check_constraint(SYNTH_CONSTRAINT_TOL)
    return SeasonalPanel(c.means(time_grid(e.shape[0])) + e)
