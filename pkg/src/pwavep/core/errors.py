"""
Exception hierarchy for PWaveP.

Every error raised on purpose by the package derives from PWavePError and
carries the exit code the CLI returns for it:

    0  success
    1  numerical failure / unexpected error
    2  configuration error (bad parameters, capacity, unsupported mode)
    3  data error (malformed files, broken graphs)
    4  oracle error (external process timeout or protocol violation)
"""

from typing import Optional


class PWavePError(Exception):
    """Base class for all PWaveP errors."""

    exit_code: int = 1


class ConfigurationError(PWavePError):
    """Invalid configuration or parameters."""

    exit_code = 2


class InvalidParameterError(ConfigurationError):
    """A parameter is outside the range an operation accepts."""


class CapacityError(ConfigurationError):
    """A dense solver was asked to handle more nodes than its configured cap."""


class UnsupportedModeError(ConfigurationError):
    """An operation is not available for the requested operator mode."""


class DataError(PWavePError):
    """Input data is malformed or unusable."""

    exit_code = 3


class ParseError(DataError):
    """A point-cloud file could not be parsed."""

    def __init__(self, path: str, line: Optional[int], message: str):
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")


class GraphConstructionError(DataError):
    """The K-NN graph cannot support the spectral operators (isolated or disconnected)."""


class NumericalError(PWavePError):
    """A numerical procedure failed or produced non-finite values."""

    exit_code = 1


class ConditioningError(NumericalError):
    """The stacked wavelet operator is too ill-conditioned to invert."""


class TrainingError(NumericalError):
    """Toy classifier training diverged."""


class OracleError(PWavePError):
    """The gradient oracle could not answer a request."""

    exit_code = 4
