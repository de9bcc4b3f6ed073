"""Exception types raised across the package."""


class RannError(Exception):
    """Base class for all package errors."""


class NonFiniteError(RannError, ValueError):
    pass


class EmptySystemError(RannError, ValueError):
    pass


class ZeroReferenceError(RannError, ValueError):
    pass


class LengthMismatchError(RannError, ValueError):
    pass


class DimensionMismatchError(RannError, ValueError):
    pass


class NonPositiveRangeError(RannError, ValueError):
    pass


class UnsupportedActivationError(RannError, ValueError):
    pass


class UnsupportedOrderError(RannError, ValueError):
    pass


class ZeroWeightRowError(RannError, ValueError):
    pass


class UntrainedError(RannError, RuntimeError):
    pass


class MissingSolutionValuesError(RannError, ValueError):
    pass


class NonlinearPdeError(RannError, NotImplementedError):
    """Physics-informed rows are only assembled for operators linear in u."""


class FactorizationFailure(RannError, RuntimeError):
    pass


class NewtonDivergence(RannError, RuntimeError):
    pass


class DegenerateDomain(RannError, ValueError):
    pass


class ConfigInvalid(RannError, ValueError):
    pass


class CorruptManifest(RannError, ValueError):
    pass


class VersionMismatch(RannError, ValueError):
    pass


class TruncatedArray(RannError, ValueError):
    pass


class CflViolation(UserWarning):
    """Emitted when the requested time step breaks the advective CFL limit."""
