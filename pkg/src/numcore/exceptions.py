"""Custom exceptions for tensor operations."""

from src.exceptions import EXIT_NUMERIC, EXIT_USAGE, TVDMError


class NumCoreError(TVDMError):
    """Base exception for all tensor-substrate errors."""


class ShapeError(NumCoreError):
    """Raised when operand shapes disagree."""

    def __init__(self, op: str, dimension: str, expected: object, actual: object):
        self.op = op
        self.dimension = dimension
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{op}: dimension '{dimension}' expected {expected}, got {actual}"
        )


class InvalidDimensionError(NumCoreError):
    """Raised when a dimension is zero or otherwise unusable."""

    def __init__(self, op: str, message: str):
        self.op = op
        super().__init__(f"{op}: {message}")


class InvalidConfigError(NumCoreError):
    """Raised when a layer or op is configured inconsistently."""

    exit_code = EXIT_USAGE

    def __init__(self, message: str):
        super().__init__(f"Invalid layer configuration: {message}")


class NonFiniteError(NumCoreError):
    """Raised when NaN or Inf shows up in values or gradients."""

    exit_code = EXIT_NUMERIC

    def __init__(self, where: str, name: str | None = None):
        self.where = where
        self.name = name
        msg = f"Non-finite values in {where}"
        if name:
            msg += f" ({name})"
        super().__init__(msg)


class GradCheckError(NumCoreError):
    """Raised when a gradient check cannot be carried out."""


class CheckpointFormatError(NumCoreError):
    """Raised when a checkpoint file is malformed or of an unknown version."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Bad checkpoint {path}: {reason}")
