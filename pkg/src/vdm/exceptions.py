"""Custom exceptions for the diffusion backbone."""

from src.exceptions import ConfigError, TVDMError


class VDMError(TVDMError):
    """Base exception for diffusion errors."""


class ScheduleError(ConfigError):
    """Raised when a noise schedule is malformed."""


class TimestepError(VDMError):
    """Raised when a timestep lies outside [1, T]."""

    def __init__(self, t: object, total: int):
        self.t = t
        self.total = total
        super().__init__(f"Timestep {t} outside [1, {total}]")


class SamplerError(ConfigError):
    """Raised when the sampler is configured with an impossible step count."""


class LatentVideoShapeError(VDMError):
    """Raised when a latent video, its conditioning or timesteps disagree."""

    def __init__(self, what: str, expected: object, actual: object):
        self.what = what
        super().__init__(f"{what}: expected {expected}, got {actual}")


class TextEncoderError(ConfigError):
    """Raised when the caption vocabulary does not fit the slot table."""

    def __init__(self, tokens: int, slots: int):
        self.tokens = tokens
        self.slots = slots
        super().__init__(f"{tokens} caption tokens do not fit in {slots} text slots")
