"""Run-directory wiring.

Maps a run directory onto the frozen models, datasets and pipeline each
command needs, checking stage order on the way: a command whose upstream
checkpoint is missing or incomplete fails with the name of the command
that produces it.
"""

from dataclasses import dataclass
from pathlib import Path

from src.amcm.module import AMCMAdapter
from src.amcm.service import load_adapter
from src.autoenc.service import TransparentAutoencoder
from src.config import RunConfig
from src.dataio.constants import MANIFEST_FILENAME
from src.dataio.service import VideoDataset, load_split
from src.exceptions import StageDependencyError
from src.numcore.checkpoint import Checkpoint, checkpoint_digest, load_checkpoint
from src.pipeline.service import TransparentVideoPipeline
from src.vdm.service import DiffusionBackbone, load_backbone

STAGE_COMMAND: dict[str, str] = {
    "data": "gen-data",
    "vae": "train-vae",
    "tvae": "train-tvae",
    "vdm": "train-vdm",
    "amcm": "train-amcm",
}


@dataclass(frozen=True)
class RunPaths:
    """Layout of a run directory."""

    root: Path

    @property
    def run_record(self) -> Path:
        return self.root / "run.json"

    @property
    def data_dir(self) -> Path:
        return self.root / "data"

    @property
    def manifest(self) -> Path:
        return self.data_dir / MANIFEST_FILENAME

    @property
    def metrics_dir(self) -> Path:
        return self.root / "metrics"

    @property
    def generated_dir(self) -> Path:
        return self.root / "generated"

    def checkpoint(self, stage: str) -> Path:
        return self.root / "checkpoints" / f"{stage}.ckpt"

    def history(self, stage: str) -> Path:
        return self.metrics_dir / f"{stage}_loss.jsonl"

    def log_file(self, command: str) -> Path:
        return self.root / "logs" / f"{command}.log"


def has_checkpoint(paths: RunPaths, stage: str) -> bool:
    """True when the stage's final (complete) checkpoint is on disk."""
    path = paths.checkpoint(stage)
    if not path.exists():
        return False
    return bool(load_checkpoint(path).metadata.extra.get("complete", False))


def require_checkpoint(paths: RunPaths, stage: str) -> Checkpoint:
    """
    Load a stage's final checkpoint.

    Raises:
        StageDependencyError: Missing, or only a periodic (incomplete) save exists
    """
    path = paths.checkpoint(stage)
    if not path.exists():
        raise StageDependencyError(STAGE_COMMAND[stage], f"{path} not found")
    ckpt = load_checkpoint(path)
    if not ckpt.metadata.extra.get("complete", False):
        raise StageDependencyError(
            STAGE_COMMAND[stage], f"{path} holds an unfinished run (step {ckpt.metadata.step})"
        )
    return ckpt


def require_dataset(paths: RunPaths) -> Path:
    """
    Raises:
        StageDependencyError: No generated dataset in the run directory
    """
    if not paths.manifest.exists():
        raise StageDependencyError(STAGE_COMMAND["data"], f"{paths.manifest} not found")
    return paths.data_dir


def upstream_digests(paths: RunPaths, stages: list[str]) -> dict[str, str]:
    """SHA-256 of each upstream checkpoint, recorded in downstream metadata."""
    return {stage: checkpoint_digest(paths.checkpoint(stage)) for stage in stages}


def get_dataset(
    paths: RunPaths, config: RunConfig, split: str, threads: int, limit: int | None = None
) -> VideoDataset:
    return load_split(
        require_dataset(paths), split, limit=limit, threshold=config.alpha_threshold, threads=threads
    )


def get_autoencoder(paths: RunPaths, config: RunConfig) -> TransparentAutoencoder:
    """Frozen VAE + TVAE from the run's stage-0 and stage-1 checkpoints."""
    vae = require_checkpoint(paths, "vae")
    tvae = require_checkpoint(paths, "tvae")
    return TransparentAutoencoder.from_checkpoints(config, vae, tvae)


def get_backbone(paths: RunPaths, config: RunConfig) -> DiffusionBackbone:
    return load_backbone(config, require_checkpoint(paths, "vdm"))


def get_adapter(paths: RunPaths, backbone: DiffusionBackbone) -> AMCMAdapter:
    return load_adapter(backbone, require_checkpoint(paths, "amcm"))


def get_pipeline(
    paths: RunPaths, config: RunConfig, with_adapter: bool = True
) -> TransparentVideoPipeline:
    """
    Generation pipeline over the run's checkpoints.

    Raises:
        StageDependencyError: Any required stage has not been trained
    """
    autoencoder = get_autoencoder(paths, config)
    backbone = get_backbone(paths, config)
    adapter = get_adapter(paths, backbone) if with_adapter else None
    return TransparentVideoPipeline(autoencoder, backbone, adapter, config)


def get_partial_pipeline(paths: RunPaths, config: RunConfig) -> TransparentVideoPipeline | None:
    """Pipeline with whatever stages exist; None without a backbone, no adapter without AMCM."""
    if not all(has_checkpoint(paths, stage) for stage in ("vae", "tvae", "vdm")):
        return None
    return get_pipeline(paths, config, with_adapter=has_checkpoint(paths, "amcm"))
