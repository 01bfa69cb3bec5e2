"""CSV layouts for panels and fitted curves.

Panel CSV: header ``t,season_1,...,season_d`` then one row per period.
Fit CSV: ``t,alpha_hat,beta_1_hat..beta_d_hat,alpha_prime_hat,
beta_1_prime_hat..beta_d_prime_hat``; a point that could not be fitted
keeps its ``t`` and leaves every other field empty.  Floats are written
with ``repr`` so files round-trip exactly.  UTF-8, LF line endings.
"""
from __future__ import annotations

import csv
import io
import math
from typing import Iterable, List, Optional, Union

import numpy as np

from .errors import ConfigError
from .estimator import FitResult
from .model import SeasonalPanel, time_grid

PathLike = Union[str, "os.PathLike[str]"]


def _fmt(x: float) -> str:
    return repr(float(x))


def panel_to_csv(panel: SeasonalPanel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"season_{j}" for j in range(1, panel.d + 1)])
    for t, row in zip(panel.t, panel.y):
        w.writerow([_fmt(t)] + [_fmt(v) for v in row])
    return buf.getvalue()


def read_panel_csv(text: str) -> SeasonalPanel:
    """Parse a panel CSV, checking the header and the ``t_i = i/n`` grid."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ConfigError("panel CSV is empty")
    header = rows[0]
    d = len(header) - 1
    expected = ["t"] + [f"season_{j}" for j in range(1, d + 1)]
    if header != expected:
        raise ConfigError(f"bad panel header {header!r}; expected t,season_1,...,season_d")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"non-numeric panel entry: {exc}") from None
    if data.ndim != 2 or data.shape[1] != d + 1:
        raise ConfigError("panel rows have inconsistent lengths")
    n = data.shape[0]
    if not np.allclose(data[:, 0], time_grid(n), rtol=0, atol=1e-9):
        raise ConfigError("t column does not match the grid t_i = i/n")
    return SeasonalPanel(data[:, 1:])


def fit_header(d: int) -> List[str]:
    betas = [f"beta_{j}" for j in range(1, d + 1)]
    return (["t", "alpha_hat"] + [f"{b}_hat" for b in betas]
            + ["alpha_prime_hat"] + [f"{b}_prime_hat" for b in betas])


def fits_to_csv(d: int, grid: Iterable[float], fits: Iterable[Optional[FitResult]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = fit_header(d)
    w.writerow(header)
    for t, fit in zip(grid, fits):
        if fit is None:
            w.writerow([_fmt(t)] + [""] * (len(header) - 1))
            continue
        vals = ([fit.alpha_hat] + list(fit.betas_hat)
                + [fit.alpha_prime_hat] + list(fit.betas_prime_hat))
        w.writerow([_fmt(t)] + [_fmt(v) for v in vals])
    return buf.getvalue()


def read_fit_csv(text: str) -> dict:
    """Columns of a fit CSV as float arrays; empty fields become NaN."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    header = rows[0]
    cols = {name: [] for name in header}
    for r in rows[1:]:
        for name, v in zip(header, r):
            cols[name].append(float(v) if v != "" else math.nan)
    return {k: np.array(v) for k, v in cols.items()}
