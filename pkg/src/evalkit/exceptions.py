"""Custom exceptions for evaluation."""

from src.exceptions import EXIT_DEPENDENCY, TVDMError


class EvalError(TVDMError):
    """Base exception for evaluation errors."""


class MetricShapeError(EvalError):
    """Raised when prediction and reference disagree in shape."""

    def __init__(self, metric: str, expected: tuple[int, ...], actual: tuple[int, ...]):
        self.metric = metric
        super().__init__(f"{metric}: shapes differ, {expected} vs {actual}")


class IncompleteReportError(EvalError):
    """Raised after writing a report in which a requested method has no rows."""

    exit_code = EXIT_DEPENDENCY

    def __init__(self, missing: list[str]):
        self.missing = missing
        super().__init__(f"Report incomplete; missing methods: {', '.join(missing)}")
