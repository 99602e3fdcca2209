"""
Exception hierarchy for holoml.

Every error carries the process exit code the CLI reports for it, so
``main()`` can map failures without inspecting messages.
"""


class HoloError(Exception):
    """
    Base class for all holoml errors.

    :cvar exit_code: Process exit code used by the CLI
    """
    exit_code = 1


class ConfigError(HoloError, ValueError):
    """Invalid or unknown configuration value."""
    exit_code = 2


class ParameterError(HoloError, ValueError):
    """Invalid argument to a generator or operator (radius, block size, ...)."""
    exit_code = 2


class GeometryError(HoloError, ValueError):
    """Array dimensions that do not fit the specimen/reference layout."""
    exit_code = 2


class GeometryUnsupportedError(GeometryError):
    """
    Geometry is valid but a reconstructor cannot handle it.

    Raised by the deconvolution baselines when the oversampling ratio is
    below two or the specimen/reference gap is narrower than the specimen.
    """
    exit_code = 3


class DataError(HoloError, ValueError):
    """Negative, nonfinite or corrupt intensity data."""
    exit_code = 4


class NumericError(HoloError, ArithmeticError):
    """Nonfinite iterate or objective value."""
    exit_code = 4


class MetricUndefinedError(NumericError):
    """Relative error with a zero reference norm."""
    exit_code = 4
