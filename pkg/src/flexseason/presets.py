"""Named curve families and strict parsing of JSON curve/error blocks."""
from __future__ import annotations

import math
from typing import Any, Mapping, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigError, DimensionError
from .model import CurveSet
from .weakdep import ErrorProcessSpec

TWO_PI = 2.0 * math.pi


def _strict(block: Mapping[str, Any], allowed, where):
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _check_d(d):
    if not isinstance(d, int) or isinstance(d, bool):
        raise ConfigError(f"d must be an integer, got {d!r}")
    if d < 2:
        raise DimensionError(f"need d >= 2 seasons, got d={d}")


def polynomial_curves(trend, seasonal) -> CurveSet:
    """Polynomial trend and seasonal effects given by ascending coefficients.

    ``seasonal`` lists the first ``d - 1`` seasons; the last is completed
    so the effects sum to zero.
    """
    alpha = Polynomial(np.asarray(trend, dtype=float))
    betas = [Polynomial(np.asarray(c, dtype=float)) for c in seasonal]
    if not betas:
        raise DimensionError("need at least one seasonal coefficient list (d >= 2)")
    last = Polynomial([0.0])
    for b in betas:
        last = last - b
    betas.append(last)
    return CurveSet(
        alpha,
        betas,
        alpha_dd=alpha.deriv(2),
        betas_dd=[b.deriv(2) for b in betas],
        name="polynomial",
    )


def linear_curves(d: int, intercept=2.0, slope=3.0, seasonal_slope=1.0) -> CurveSet:
    """``alpha = intercept + slope t``, ``beta_j = seasonal_slope (j - (d+1)/2)(t - 1/2)``."""
    _check_d(d)
    seasonal = []
    for j in range(1, d):
        c = seasonal_slope * (j - (d + 1) / 2.0)
        seasonal.append([-0.5 * c, c])
    cs = polynomial_curves([intercept, slope], seasonal)
    return CurveSet(cs.alpha, cs.betas, cs.alpha_dd, cs.betas_dd, name="linear")


def trig_curves(d: int, trend_amplitude=1.0, seasonal_amplitude=0.5) -> CurveSet:
    """``alpha = a cos(2 pi t)``, ``beta_j = b sin(2 pi t + 2 pi (j-1)/d)``.

    The seasonal phases are equally spaced, so the effects sum to zero
    for every ``d >= 2``.
    """
    _check_d(d)
    a, b = float(trend_amplitude), float(seasonal_amplitude)
    k = TWO_PI**2

    def beta(j, scale):
        phase = TWO_PI * j / d
        return lambda t: scale * np.sin(TWO_PI * np.asarray(t, dtype=float) + phase)

    return CurveSet(
        lambda t: a * np.cos(TWO_PI * np.asarray(t, dtype=float)),
        [beta(j, b) for j in range(d)],
        alpha_dd=lambda t: -k * a * np.cos(TWO_PI * np.asarray(t, dtype=float)),
        betas_dd=[beta(j, -k * b) for j in range(d)],
        name="trig",
    )


def curves_from_config(block: Mapping[str, Any]) -> CurveSet:
    if not isinstance(block, Mapping) or "preset" not in block:
        raise ConfigError("curves block must be an object with a 'preset' key")
    preset = block["preset"]
    if preset == "linear":
        _strict(block, {"preset", "d", "intercept", "slope", "seasonal_slope"}, "curves")
        opts = {k: float(v) for k, v in block.items() if k not in ("preset", "d")}
        return linear_curves(block.get("d", 2), **opts)
    if preset == "trig":
        _strict(block, {"preset", "d", "trend_amplitude", "seasonal_amplitude"}, "curves")
        opts = {k: float(v) for k, v in block.items() if k not in ("preset", "d")}
        return trig_curves(block.get("d", 2), **opts)
    if preset == "polynomial":
        _strict(block, {"preset", "d", "trend", "seasonal"}, "curves")
        if "trend" not in block or "seasonal" not in block:
            raise ConfigError("polynomial curves need 'trend' and 'seasonal' coefficient lists")
        seasonal = block["seasonal"]
        if "d" in block:
            _check_d(block["d"])
            if block["d"] != len(seasonal) + 1:
                raise ConfigError(
                    f"polynomial curves: d={block['d']} needs {block['d'] - 1} seasonal lists"
                )
        return polynomial_curves(block["trend"], seasonal)
    raise ConfigError(f"unknown curve preset {preset!r}; expected linear, trig or polynomial")


def errors_from_config(block: Optional[Mapping[str, Any]], d: int) -> Optional[ErrorProcessSpec]:
    """``None`` means a noiseless panel."""
    if block is None:
        return None
    if not isinstance(block, Mapping):
        raise ConfigError("errors block must be an object or null")
    data = dict(block)
    data.setdefault("d", d)
    if data["d"] != d:
        raise DimensionError(f"error spec has d={data['d']} but curves have d={d}")
    spec = ErrorProcessSpec.from_dict(data)
    spec.validate()
    return spec
