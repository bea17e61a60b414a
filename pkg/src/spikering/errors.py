"""Exception hierarchy.

:class:`ValidationError` covers bad inputs (CLI exit code 2) and
:class:`NumericalError` covers solver failures (exit code 3).
"""


class SpikeRingError(Exception):
    """Base class for all package errors."""


class ValidationError(SpikeRingError, ValueError):
    pass


class NumericalError(SpikeRingError, ArithmeticError):
    pass


class NonSubcriticalExponent(ValidationError):
    pass


class DhatTooSmall(ValidationError):
    pass


class NonZeroMeanForcing(ValidationError):
    pass


class OutOfTabulatedRange(ValidationError):
    pass


class ZeroSeparation(ValidationError):
    pass


class SeparationTooSmall(ValidationError):
    pass


class DecayViolated(ValidationError):
    pass


class InfimumViolated(ValidationError):
    pass


class RegimeViolated(ValidationError):
    """Parameters fail the m/sigma growth condition and forcing was not requested."""


class ShootingFailed(NumericalError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


class NoBracket(NumericalError):
    pass


class SingularBlock(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class NotContracting(NumericalError):
    pass
