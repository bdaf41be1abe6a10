"""Pydantic schemas for evaluation reports."""

from pydantic import BaseModel, Field

from .constants import PROXY_NOTE


class VideoScores(BaseModel):
    """Metrics of one generated video against its ground truth."""

    video_id: str
    alpha_iou: float = Field(ge=0.0, le=1.0)
    psnr: float = Field(description="RGB PSNR in dB, composited over black")
    aer: float = Field(ge=0.0, le=1.0, description="Artifact escape ratio")
    edge_fringe: float = Field(ge=0.0)
    flicker: float = Field(ge=0.0)


class MethodRow(BaseModel):
    """One row of the ablation table: metrics averaged over the eval videos."""

    method: str
    videos: int = 0
    alpha_iou: float | None = None
    psnr: float | None = None
    aer: float | None = None
    edge_fringe: float | None = None
    flicker: float | None = None
    missing: bool = Field(default=False, description="Method could not run; metrics absent")
    reason: str | None = None


class MetricsReport(BaseModel):
    """Ablation report over identical seeds and prompts for every method."""

    dataset: str
    seeds: list[int]
    config_hash: str
    requested: list[str]
    rows: list[MethodRow]
    note: str = PROXY_NOTE

    @property
    def missing_methods(self) -> list[str]:
        present = {row.method for row in self.rows if not row.missing}
        return [m for m in self.requested if m not in present]


class Stage1Report(BaseModel):
    """Held-out quality of the transparent autoencoder."""

    videos: int
    frames: int
    alpha_iou: float = Field(ge=0.0, le=1.0)
    psnr_adjusted: float = Field(description="RGB PSNR through D*(z + z_alpha)")
    psnr_vae: float = Field(description="RGB PSNR through the frozen VAE alone")
    perturbation_ratio: float = Field(ge=0.0, description="Mean ||z_alpha|| / ||z||")
    config_hash: str
