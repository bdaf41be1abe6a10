"""Stage 2: train the motion-constraint adapter against the frozen diffusion backbone."""

from pathlib import Path

import numpy as np

from src.autoenc.service import TransparentAutoencoder
from src.config import RunConfig
from src.dataio.service import VideoDataset
from src.numcore.checkpoint import Checkpoint
from src.numcore.layers import Parameter
from src.numcore.tensor import Tensor, no_grad
from src.training.schemas import TrainResult
from src.training.seeding import StageStreams
from src.training.service import Trainer
from src.training.strategies import TrainingObjective
from src.vdm.losses import loss_eps
from src.vdm.service import DiffusionBackbone, LatentVideoBank, LatentVideoBatch

from .exceptions import UnfrozenBackboneError
from .module import AMCMAdapter


def ensure_frozen(backbone: DiffusionBackbone) -> None:
    """
    Raises:
        UnfrozenBackboneError: Any backbone parameter still requires grad
    """
    for name, param in backbone.named_parameters().items():
        if param.requires_grad:
            raise UnfrozenBackboneError(name)


def build_adapter(backbone: DiffusionBackbone, rng: np.random.Generator) -> AMCMAdapter:
    return AMCMAdapter(backbone.unet.hook_channels(), rng)


def load_adapter(backbone: DiffusionBackbone, amcm_ckpt: Checkpoint) -> AMCMAdapter:
    adapter = build_adapter(backbone, np.random.default_rng(0))
    adapter.load_state_dict(amcm_ckpt.subset("amcm."))
    return adapter.freeze()


class AMCMObjective(TrainingObjective):
    """eps-prediction with ground-truth per-frame boxes; only the adapter learns."""

    stage = "amcm"

    def __init__(
        self,
        backbone: DiffusionBackbone,
        adapter: AMCMAdapter,
        bank: LatentVideoBank,
        batch: int,
    ):
        ensure_frozen(backbone)
        self.backbone = backbone
        self.adapter = adapter
        self.bank = bank
        self.batch = batch

    def trainable(self) -> dict[str, Parameter]:
        return {f"amcm.{n}": p for n, p in self.adapter.named_parameters()}

    def frozen(self) -> dict[str, Parameter]:
        return self.backbone.named_parameters()

    def next_batch(self, rng: np.random.Generator) -> LatentVideoBatch:
        return self.bank.sample(rng, self.batch)

    def loss(
        self, batch: LatentVideoBatch, rng: np.random.Generator
    ) -> tuple[Tensor, dict[str, float]]:
        with no_grad():
            text = self.backbone.text(batch.captions)
        cond = Tensor.constant(batch.cond)
        unet = self.backbone.unet

        def denoise(z_t: Tensor, t: np.ndarray) -> Tensor:
            return unet(z_t, t, cond, text, batch.boxes, self.adapter)

        return loss_eps(denoise, batch.z0, self.backbone.schedule, rng), {}

    def metadata_extra(self) -> dict[str, float]:
        return {"latent_scale": self.backbone.latent_scale}


def train_amcm(
    dataset: VideoDataset,
    config: RunConfig,
    autoencoder: TransparentAutoencoder,
    backbone: DiffusionBackbone,
    streams: StageStreams,
    checkpoint_path: Path,
    history_path: Path | None = None,
    upstream: dict[str, str] | None = None,
    debug: bool = False,
    show_progress: bool = True,
) -> TrainResult:
    """
    Train AMCM blocks with ground-truth boxes from each video's alpha.

    Raises:
        UnfrozenBackboneError: The backbone was handed over trainable
    """
    bank = LatentVideoBank(autoencoder, dataset)
    adapter = build_adapter(backbone, streams.init)
    objective = AMCMObjective(backbone, adapter, bank, config.batch)
    trainer = Trainer(
        objective,
        config,
        streams,
        checkpoint_path,
        history_path,
        upstream=upstream,
        debug=debug,
        show_progress=show_progress,
    )
    return trainer.run()
