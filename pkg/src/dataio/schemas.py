"""Schemas for sprite videos, manifests and curation reports."""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .constants import COLORS, DEFAULT_FPS
from .exceptions import DataIOError

ShapeName = Literal["circle", "square", "star"]
MotionName = Literal["drift", "oscillate", "rotate", "static", "blink"]
DirectionName = Literal["right", "left", "down", "up"]
SplitName = Literal["train", "eval"]


class SpriteParams(BaseModel):
    """Everything needed to render one sprite video."""

    shape: ShapeName = Field(description="Sprite outline")
    color: str = Field(description="Colour name from the fixed palette")
    motion: MotionName = Field(description="Motion pattern")
    size: int = Field(ge=2, description="Sprite side length in pixels")
    frames: int = Field(ge=1, description="Frame count (N)")
    height: int = Field(ge=4, description="Frame height (H)")
    width: int = Field(ge=4, description="Frame width (W)")
    direction: DirectionName = Field(default="right", description="Drift direction")
    speed: int = Field(default=1, ge=0, description="Drift speed in pixels per frame")
    soft_edge: bool = Field(default=False, description="Add a 1-px half-alpha ring")
    x0: int | None = Field(default=None, description="Initial left edge; drawn from seed if unset")
    y0: int | None = Field(default=None, description="Initial top edge; drawn from seed if unset")
    fps: int = Field(default=DEFAULT_FPS, ge=1)

    @field_validator("color")
    @classmethod
    def color_in_palette(cls, v: str) -> str:
        if v not in COLORS:
            raise ValueError(f"unknown colour '{v}'; choose from {sorted(COLORS)}")
        return v


@dataclass
class RGBAVideo:
    """
    Straight-alpha RGBA frames of shape [N, H, W, 4] with values in [0, 1].

    Example:
        video = RGBAVideo(frames=np.zeros((8, 32, 32, 4), np.float32), caption="")
        video.alpha.shape  # (8, 32, 32)
    """

    frames: np.ndarray
    caption: str = ""
    fps: int = DEFAULT_FPS

    def __post_init__(self) -> None:
        if self.frames.ndim != 4 or self.frames.shape[-1] != 4:
            raise DataIOError(f"RGBA video needs shape [N, H, W, 4], got {self.frames.shape}")
        if self.frames.shape[0] < 1:
            raise DataIOError("RGBA video needs at least one frame")

    @property
    def rgb(self) -> np.ndarray:
        return self.frames[..., :3]

    @property
    def alpha(self) -> np.ndarray:
        return self.frames[..., 3]

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])


class VideoMeta(BaseModel):
    """Sidecar metadata written next to a frame sequence."""

    frames: int = Field(ge=1)
    height: int = Field(ge=1)
    width: int = Field(ge=1)
    fps: int = Field(default=DEFAULT_FPS, ge=1)
    caption: str = ""
    params: SpriteParams | None = Field(
        default=None, description="Generator parameters, when the video is synthetic"
    )


class ManifestEntry(BaseModel):
    """One line of the dataset manifest."""

    id: str = Field(description="Unique video id across all splits")
    path: str = Field(description="Frame directory, relative to the manifest")
    frames: int = Field(ge=1, description="Frame count (N)")
    height: int = Field(ge=1)
    width: int = Field(ge=1)
    caption: str = ""
    boxes: str | None = Field(default=None, description="Box file, relative to the manifest")
    split: SplitName = "train"


class FilterReport(BaseModel):
    """Counts produced by a curation pass."""

    total: int = 0
    kept: int = 0
    removed: dict[str, int] = Field(default_factory=dict, description="Rule name -> removed")
    removed_ids: dict[str, list[str]] = Field(default_factory=dict)
