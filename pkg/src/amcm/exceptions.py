"""Custom exceptions for the motion constraint module."""

from src.exceptions import EXIT_USAGE, TVDMError


class AMCMError(TVDMError):
    """Base exception for motion-constraint errors."""


class BoxError(AMCMError):
    """Raised when a box lies outside the image or has inverted corners."""

    exit_code = EXIT_USAGE

    def __init__(self, index: int, reason: str):
        self.index = index
        super().__init__(f"Invalid box at frame {index}: {reason}")


class BoxFileError(AMCMError):
    """Raised when a box file cannot be parsed."""

    exit_code = EXIT_USAGE

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Bad box file {path}: {reason}")


class FrameCountMismatchError(AMCMError):
    """Raised when features and boxes disagree on the frame count."""

    def __init__(self, feature_frames: int, box_frames: int):
        self.feature_frames = feature_frames
        self.box_frames = box_frames
        super().__init__(
            f"Features carry {feature_frames} frames but boxes carry {box_frames}"
        )


class UnfrozenBackboneError(AMCMError):
    """Raised when a backbone parameter would be trained during stage 2."""

    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"Backbone parameter '{parameter}' is not frozen")
