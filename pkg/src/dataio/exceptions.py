"""Custom exceptions for dataset generation and frame I/O."""

from src.exceptions import ConfigError, TVDMError


class DataIOError(TVDMError):
    """Base exception for dataset errors."""


class SpriteConfigError(ConfigError):
    """Raised when sprite parameters cannot be rendered inside the frame."""


class SequenceLoadError(DataIOError):
    """Raised when an RGBA frame sequence on disk is incomplete or inconsistent."""

    def __init__(self, directory: str, reason: str):
        self.directory = directory
        super().__init__(f"Cannot load frame sequence {directory}: {reason}")


class ManifestError(DataIOError):
    """Raised when a manifest is malformed or points at missing data."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Bad manifest {path}: {reason}")
