"""Exception hierarchy shared by all flexseason modules."""


class FlexSeasonError(Exception):
    """Base class for every error raised by the package."""


class BandwidthError(FlexSeasonError, ValueError):
    pass


class DimensionError(FlexSeasonError, ValueError):
    pass


class DomainError(FlexSeasonError, ValueError):
    pass


class ConstraintError(FlexSeasonError, ValueError):
    pass


class ConfigError(FlexSeasonError, ValueError):
    pass


class SpecError(FlexSeasonError, ValueError):
    pass


class SummabilityError(FlexSeasonError, ValueError):
    pass


class DegenerateWindow(FlexSeasonError, ArithmeticError):
    """Kernel window too small for a local linear fit at ``t``.

    The offending evaluation point is kept on the instance so batched
    callers can report it.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
