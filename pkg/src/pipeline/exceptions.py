"""Custom exceptions for generation."""

from src.exceptions import EXIT_USAGE, TVDMError


class PipelineError(TVDMError):
    """Base exception for generation errors."""


class ConditionImageError(PipelineError):
    """Raised when the conditioned image does not match the trained geometry."""

    exit_code = EXIT_USAGE

    def __init__(self, expected: tuple[int, ...], actual: tuple[int, ...]):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Conditioned image must be {expected}, got {actual}")
