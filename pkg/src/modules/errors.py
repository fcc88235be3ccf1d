"""
Errors Module

This module defines the exception hierarchy shared by the estimation modules.
"""


class WLEEError(Exception):
    """Base class for every error raised by the package"""


class DomainError(WLEEError, ValueError):
    """An argument lies outside the domain of the operation"""


class UnsupportedDimensionError(DomainError):
    """The operation is not available for the requested dimension"""

    def __init__(self, dim, supported):
        self.dim = dim
        self.supported = tuple(supported)
        super().__init__(f"dimension {dim} is not supported (supported: {', '.join(map(str, self.supported))})")


class FactorizationError(WLEEError):
    """
    A scatter matrix failed the symmetric positive definite check

    Attributes:
        pivot (int): zero-based index of the first failing pivot
    """

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class DegenerateSampleError(WLEEError):
    """The sample covariance is singular (too few or rank-deficient points)"""


class DegenerateStepError(WLEEError):
    """A reweighting step produced a non positive definite scatter"""


class AllDownweightedError(WLEEError):
    """Every observation received (nearly) zero weight"""


class ConfigError(WLEEError, ValueError):
    """Invalid tuning or run configuration"""


class DataError(WLEEError):
    """
    Invalid input data

    Attributes:
        row (int): 1-based line number in the input file, if known
        column (str): column name or index, if known
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        super().__init__(message)
