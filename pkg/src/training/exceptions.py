"""Custom exceptions for the training loop."""

from src.exceptions import TVDMError


class TrainingError(TVDMError):
    """Base exception for training-loop errors."""


class FrozenGradientError(TrainingError):
    """Raised in debug mode when a frozen parameter received gradient."""

    def __init__(self, parameter: str, step: int):
        self.parameter = parameter
        self.step = step
        super().__init__(f"Frozen parameter '{parameter}' received gradient at step {step}")
