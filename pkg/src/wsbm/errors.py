"""Exception hierarchy.

The CLI maps each family to an exit code: data errors exit with 2,
numerical failures with 3, configuration errors with 1.
"""


class WSBMError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(WSBMError):
    """Invalid run configuration or command-line usage."""


class DataError(WSBMError):
    """Malformed or invalid input data."""


class NetworkValidationError(DataError):
    """A weight matrix violates the network invariants.

    ``reason`` is one of ``"too-few-nodes"``, ``"asymmetric-weights"``,
    ``"non-finite-entry"`` or ``"not-square"``; ``pair`` holds the first
    offending index pair when there is one.
    """

    def __init__(self, reason, message, pair=None):
        super().__init__(message)
        self.reason = reason
        self.pair = pair


class FormatError(DataError):
    """An input file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(WSBMError):
    """The estimator hit a numerically degenerate configuration."""


class RankDeficiencyError(NumericalError):
    """The two-star moment matrix has numerical rank below ``r``."""


class IllConditionedError(NumericalError):
    """The estimated loading matrix is too ill-conditioned to invert."""


class VanishingShareError(NumericalError):
    """An entry of the estimated ``H_1`` is too close to zero for a ratio."""


class FunctionalValueError(NumericalError):
    """A functional produced non-finite values on the observed weights."""
