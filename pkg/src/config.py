"""Configuration management using Pydantic Settings.

Two layers live here:

- ``Settings``: process-level knobs read from the environment
  (``TVDM_THREADS``, ``TVDM_LOG_LEVEL``, ``TVDM_DEBUG``).
- ``RunConfig``: every key a run is reproducible from. Loaded from a plain
  ``key = value`` file, then overridden by command-line flags.
"""

import hashlib
import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.exceptions import ConfigError

CODE_VERSION = "1.0.0"


class Settings(BaseSettings):
    """
    Process settings loaded from environment variables.

    All settings can be overridden via ``TVDM_*`` environment variables or a .env file.
    """

    model_config = SettingsConfigDict(
        env_prefix="TVDM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    debug: bool = Field(
        default=False,
        description="Audit frozen-parameter gradients after every training step",
    )
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    threads: int = Field(
        default=4,
        ge=1,
        le=256,
        description="Upper bound on worker threads for generation, I/O and metrics",
    )


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings singleton.

    Uses lru_cache to ensure settings are only loaded once.
    """
    return Settings()


def _parse_int_tuple(value: Any) -> Any:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        return tuple(int(p) for p in parts)
    return value


class RunConfig(BaseModel):
    """
    Every key a run depends on, with desk-scale defaults.

    Unknown keys are rejected. The resolved values are echoed into run
    metadata and hashed into ``config_hash``.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    # Reproducibility
    seed: int = Field(default=0, ge=0, description="Root seed of the run generator")

    # Data
    resolution: int = Field(default=32, ge=8, le=1024, description="Frame height and width in pixels")
    frames: int = Field(default=8, ge=2, le=64, description="Frames per video (N)")
    train_videos: int = Field(default=512, ge=1, description="Generated training videos")
    eval_videos: int = Field(default=64, ge=1, description="Generated evaluation videos")
    soft_edge_fraction: float = Field(
        default=0.0, ge=0.0, le=1.0, description="Share of generated sprites with a 1-px soft edge"
    )
    min_resolution: int = Field(
        default=16, ge=1, description="Curation floor on min(H, W); 100 under --paper-scale"
    )

    # Autoencoders
    latent_channels: int = Field(default=4, ge=1, le=64, description="Latent channels (c)")
    vae_channels: tuple[int, ...] = Field(
        default=(32, 64, 64), description="Vanilla VAE channel plan, one entry per 2x level"
    )
    tvae_encoder_channels: tuple[int, ...] = Field(
        default=(16, 32, 64, 64), description="TVAE encoder plan: stem then three stride-2 blocks"
    )
    tvae_decoder_channels: tuple[int, ...] = Field(
        default=(16, 32, 32), description="TVAE pixel U-Net plan: full, half, quarter resolution"
    )
    kl_weight: float = Field(default=1e-6, ge=0.0, description="KL weight of the vanilla VAE")
    lambda_: float = Field(
        default=1.0, alias="lambda", description="Identity loss weight in the TVAE objective"
    )

    # Diffusion backbone
    base_channels: int = Field(default=32, ge=2, description="U-Net channels at full latent resolution")
    block_count: int = Field(default=2, ge=1, le=4, description="U-Net resolution levels")
    norm_groups: int = Field(default=8, ge=1, description="Group count for group norm")
    text_dim: int = Field(default=64, ge=1, description="Text embedding width (D_text)")
    timesteps: int = Field(default=1000, ge=1, description="Diffusion steps (T)")
    beta_schedule: Literal["linear", "cosine"] = "linear"
    sampler_steps: int = Field(default=50, ge=1, description="DDIM steps at generation time")
    eta: float = Field(default=0.0, ge=0.0, le=1.0, description="DDIM stochasticity")

    # Optimisation
    lr: float = Field(default=3e-5, gt=0.0, description="AdamW learning rate")
    weight_decay: float = Field(default=0.01, ge=0.0, description="AdamW decoupled weight decay")
    batch: int = Field(default=8, ge=1, description="Batch size (videos or frames per step)")
    steps: int = Field(default=2000, ge=1, description="Optimisation steps per stage")
    checkpoint_every: int = Field(default=500, ge=1, description="Periodic checkpoint interval (K)")

    # Motion constraint and evaluation
    alpha_threshold: float = Field(
        default=1.0 / 255.0, ge=0.0, lt=1.0, description="Foreground threshold for box extraction"
    )
    chroma_tolerance: float = Field(
        default=0.35, gt=0.0, lt=1.0, description="Chroma key distance to key green"
    )
    aer_dilation: int = Field(default=1, ge=0, description="Box dilation in pixels for AER")

    debug: bool = Field(default=False, description="Per-step frozen-gradient audit")

    @field_validator(
        "vae_channels", "tvae_encoder_channels", "tvae_decoder_channels", mode="before"
    )
    @classmethod
    def split_channel_plan(cls, v: Any) -> Any:
        """Accept comma-separated channel plans from key-value files."""
        return _parse_int_tuple(v)

    @field_validator("lambda_")
    @classmethod
    def lambda_non_negative(cls, v: float) -> float:
        """The identity weight must not flip the sign of the objective."""
        if v < 0:
            raise ValueError("lambda must be >= 0")
        return v

    @model_validator(mode="after")
    def check_geometry(self) -> "RunConfig":
        """Latent grid must support the requested U-Net depth."""
        if self.resolution % 8 != 0:
            raise ValueError("resolution must be divisible by 8")
        latent = self.resolution // 8
        if latent % (2 ** (self.block_count - 1)) != 0:
            raise ValueError(
                f"latent grid {latent} not divisible by 2^(block_count-1) for block_count={self.block_count}"
            )
        if len(self.vae_channels) != 3:
            raise ValueError("vae_channels needs exactly three entries (8x downscale)")
        if len(self.tvae_encoder_channels) != 4:
            raise ValueError("tvae_encoder_channels needs four entries")
        if len(self.tvae_decoder_channels) != 3:
            raise ValueError("tvae_decoder_channels needs three entries")
        return self

    @property
    def lam(self) -> float:
        """Identity loss weight (``lambda`` is a Python keyword)."""
        return self.lambda_

    def to_record(self) -> dict[str, Any]:
        """Key-value view using the public key names."""
        return self.model_dump(mode="json", by_alias=True)


# Full-scale hyperparameters behind --paper-scale; the desk defaults above scale these down.
PAPER_SCALE_PRESET: dict[str, Any] = {
    "resolution": 384,
    "frames": 16,
    "lr": 3e-5,
    "lambda": 1.0,
    "batch": 4,
    "min_resolution": 100,
    "steps": 100_000,
}


def parse_key_value_file(path: Path) -> dict[str, str]:
    """
    Parse a plain-text ``key = value`` configuration file.

    Blank lines and ``#`` comments are ignored.

    Raises:
        ConfigError: If a line is malformed or a key repeats
    """
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")

    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key", key=key)
        values[key] = value
    return values


def load_run_config(
    config_file: Path | None = None,
    overrides: dict[str, Any] | None = None,
    paper_scale: bool = False,
    base: dict[str, Any] | None = None,
) -> RunConfig:
    """
    Resolve a RunConfig: base record, preset, file, then overrides (flags win).

    Args:
        config_file: Optional key-value file
        overrides: Values from command-line flags
        paper_scale: Start from the full-scale preset
        base: Previously resolved record, e.g. from an existing run directory

    Returns:
        Validated, immutable RunConfig

    Raises:
        ConfigError: Unknown key or invalid value
    """
    merged: dict[str, Any] = dict(base or {})
    if paper_scale:
        merged.update(PAPER_SCALE_PRESET)
    if config_file is not None:
        merged.update(parse_key_value_file(config_file))
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(p) for p in first["loc"]) or None
        raise ConfigError(first["msg"], key=key) from exc


def config_hash(config: RunConfig) -> str:
    """Stable 16-hex-digit digest of the resolved configuration."""
    canonical = json.dumps(config.to_record(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
