"""Custom exceptions for the autoencoders."""

from src.exceptions import TVDMError


class AutoencError(TVDMError):
    """Base exception for autoencoder errors."""


class LatentShapeError(AutoencError):
    """Raised when an image or latent does not fit the autoencoder geometry."""

    def __init__(self, what: str, expected: object, actual: object):
        self.what = what
        super().__init__(f"{what}: expected {expected}, got {actual}")
