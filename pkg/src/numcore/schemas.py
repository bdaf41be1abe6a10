"""Pydantic schemas for the checkpoint header."""

from typing import Any

from pydantic import BaseModel, Field


class TensorIndexEntry(BaseModel):
    """Location of one named tensor inside the checkpoint payload."""

    name: str = Field(description="Dotted parameter or optimizer-state name")
    shape: list[int] = Field(description="Tensor shape")
    offset: int = Field(ge=0, description="Byte offset from the start of the payload")
    nbytes: int = Field(ge=0, description="Payload bytes (4 per element)")


class CheckpointMetadata(BaseModel):
    """Training metadata stored next to the parameters."""

    stage: str = Field(description="Pipeline stage that produced the checkpoint")
    step: int = Field(default=0, ge=0, description="Optimizer steps applied")
    seed: int = Field(default=0, ge=0, description="Root seed of the run")
    config_hash: str = Field(default="", description="Digest of the resolved run config")
    code_version: str = Field(default="", description="Package version that wrote the file")
    config: dict[str, Any] = Field(default_factory=dict, description="Resolved run config")
    upstream: dict[str, str] = Field(
        default_factory=dict, description="Stage name -> digest of the checkpoint it builds on"
    )
    extra: dict[str, Any] = Field(
        default_factory=dict, description="Stage-specific values, e.g. latent_scale"
    )


class CheckpointHeader(BaseModel):
    """JSON header that precedes the little-endian float32 payload."""

    tensors: list[TensorIndexEntry] = Field(default_factory=list)
    metadata: CheckpointMetadata
