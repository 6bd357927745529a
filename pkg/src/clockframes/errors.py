"""Exception hierarchy shared by every module in the package."""


class ClockFramesError(Exception):
    """Base class for all package errors."""


class LayoutError(ClockFramesError, ValueError):
    """Tensor-factor layouts are incompatible (label clash, missing factor, wrong size)."""


class NumericError(ClockFramesError, ArithmeticError):
    """Non-finite input or output in a numerical routine."""


class SingularOperatorError(NumericError):
    """An operator that must be inverted is (numerically) singular.

    Attributes
    ----------
    singular_value : float
        The offending (smallest) singular value or diagonal entry.
    """

    def __init__(self, message, singular_value=None):
        super().__init__(message)
        self.singular_value = singular_value


class HorizonError(SingularOperatorError):
    """The factor ``1 - g(t)`` vanishes: the effective generator diverges."""


class DomainError(ClockFramesError, ValueError):
    """An argument is outside the domain of the operation."""


class PreconditionError(DomainError):
    """A documented precondition on an input state does not hold."""


class ClockConstructionError(ClockFramesError):
    """A clock model cannot be built with the requested parameters."""


class DegenerateClockError(ClockConstructionError):
    """Time states fail to span the clock space."""


class IntegratorBlowupError(NumericError):
    """Norm growth during integration exceeded the blow-up limit."""


class DefectiveOperatorError(NumericError):
    """An operator is not diagonalizable within tolerance."""


class DimensionCapError(DomainError):
    """Requested joint dimension exceeds the dense-matrix cap."""


class ConfigError(ClockFramesError, ValueError):
    """A scenario configuration failed validation.

    All problems found are collected in ``errors`` rather than stopping at the first.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
