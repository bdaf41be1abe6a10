"""Schemas for training progress and results."""

from pydantic import BaseModel, Field


class LossRecord(BaseModel):
    """One line of the loss history."""

    step: int = Field(ge=1)
    loss: float
    smoothed: float = Field(description="Mean loss over the trailing window")
    metrics: dict[str, float] = Field(default_factory=dict)


class TrainResult(BaseModel):
    """Summary of a finished stage."""

    stage: str
    steps: int
    final_loss: float
    smoothed_loss: float
    checkpoint: str = Field(description="Path of the final checkpoint")
    digest: str = Field(description="SHA-256 of the final checkpoint")
