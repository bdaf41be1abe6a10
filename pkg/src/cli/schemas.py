"""Schemas for the run record kept at the root of every run directory."""

from typing import Any

from pydantic import BaseModel, Field


class CommandRecord(BaseModel):
    """One command executed against the run directory."""

    command: str
    config_hash: str
    outputs: list[str] = Field(default_factory=list)
    digests: dict[str, str] = Field(
        default_factory=dict, description="Checkpoint name -> SHA-256 of the written file"
    )


class RunRecord(BaseModel):
    """``run.json``: everything needed to re-run the directory from scratch."""

    code_version: str
    seed: int
    config: dict[str, Any] = Field(description="Resolved configuration of the first command")
    config_hash: str
    commands: list[CommandRecord] = Field(default_factory=list)
