"""Schemas for generation requests and their on-disk records."""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from src.amcm.boxes import BoxSequence

BoxSource = Literal["conditioned-image", "override", "full-frame"]


class GenerationRequest(BaseModel):
    """One video to generate; the conditioned image travels separately as an array."""

    prompt: str = Field(default="", description="Caption; empty means unconditional text")
    seed: int = Field(ge=0, description="Seed of the starting noise")
    use_amcm: bool = Field(default=True, description="Route features through the trained adapter")


@dataclass
class GeneratedVideo:
    """Decoded RGBA frames [N, H, W, 4] with the boxes the run was constrained by."""

    frames: np.ndarray
    boxes: BoxSequence
    box_source: BoxSource
    request: GenerationRequest


class GenerationMeta(BaseModel):
    """Sidecar written next to generated frames."""

    prompt: str
    seed: int
    frames: int
    height: int
    width: int
    used_amcm: bool
    box_source: BoxSource
    sampler_steps: int
    eta: float
    config_hash: str
    upstream: dict[str, str] = Field(
        default_factory=dict, description="Checkpoint digests the video was generated from"
    )
