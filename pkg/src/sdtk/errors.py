"""Exception hierarchy shared by every sdtk module."""


class SdtkError(Exception):
    """Base class for all sdtk errors."""


class ConfigurationError(SdtkError, ValueError):
    """Malformed problem data: shapes, delay sets, files, controller tables."""


class InvalidDelayError(SdtkError, ValueError):
    """A switching signal produced a delay outside the plant's delay set."""


class HorizonError(SdtkError, IndexError):
    """A finite signal was queried past its end, or a horizon is too short."""


class UnsupportedInstanceError(SdtkError, ValueError):
    """The requested analysis does not cover this instance (e.g. m != 1)."""


class SingularMatrixError(SdtkError, ValueError):
    """An operation that needs an invertible matrix received a singular one."""


class BudgetExceededError(SdtkError, RuntimeError):
    """An exhaustive search ran out of its state or node budget."""


class PlanError(SdtkError, RuntimeError):
    """A dead-beat plan could not be built from the given signal prefix."""
