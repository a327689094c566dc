"""Exception hierarchy.

Errors split into two groups so the command line front end can map them to
exit codes: configuration problems (bad parameters, mismatched inputs) and
numeric failures (singular inversion, divergence, failed measurement).
"""


class SpecEnhanceError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpecEnhanceError, ValueError):
    """Inputs are inconsistent or outside their admissible domain."""


class ParameterDomainError(ConfigurationError):
    """A kernel or condition parameter is outside its valid range."""


class NumericError(SpecEnhanceError, ArithmeticError):
    """A computation could not be carried out reliably."""


class UnsupportedFormError(NumericError):
    """No closed real-space form exists; use the Fourier (grid) path instead."""


class SingularInversionError(NumericError):
    """Unregularized inversion hit a vanishing symbol."""


class DataIncompatibleError(NumericError):
    """The data cannot be fitted to the requested discrepancy level."""


class MeasurementError(NumericError):
    """A line width (or similar) could not be measured."""


class RangeOverflowError(NumericError):
    """A value exceeds the floating point range.

    The natural logarithm of the value is kept in ``log_value``.
    """

    def __init__(self, message, log_value):
        super().__init__(message)
        self.log_value = log_value


class BoundInvalidError(NumericError):
    """The hypotheses of the interpolation bound are not met."""


class EnhancementTooAggressiveError(NumericError):
    """The exponent deficit reached one, so the error bound is vacuous."""


class RankDeficiencyError(NumericError):
    """The line-shape design matrix lost rank.

    ``pair`` holds the indices of the closest pair of line locations.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair
