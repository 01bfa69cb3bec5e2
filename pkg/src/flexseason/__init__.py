"""Local linear estimation for flexible seasonal time series with weakly dependent errors."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BandwidthError,
    ConfigError,
    ConstraintError,
    DegenerateWindow,
    DimensionError,
    DomainError,
    FlexSeasonError,
    SpecError,
    SummabilityError,
)
from .kernel import KernelSpec  # noqa: E402
from .model import CurveSet, DesignMatrix, SeasonalPanel, build_design  # noqa: E402
from .estimator import FitConfig, FitResult, fit_at, fit_grid  # noqa: E402
from .weakdep import ErrorProcessSpec, simulate  # noqa: E402

__all__ = [
    "BandwidthError", "ConfigError", "ConstraintError", "DegenerateWindow",
    "DimensionError", "DomainError", "FlexSeasonError", "SpecError",
    "SummabilityError", "KernelSpec", "CurveSet", "DesignMatrix",
    "SeasonalPanel", "build_design", "FitConfig", "FitResult", "fit_at",
    "fit_grid", "ErrorProcessSpec", "simulate",
]
