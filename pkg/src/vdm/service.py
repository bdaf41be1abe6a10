"""Stage 1.5: toy pretraining of the video diffusion backbone, and the frozen backbone used afterwards."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.autoenc.service import TransparentAutoencoder
from src.config import RunConfig
from src.dataio.service import VideoDataset
from src.dataio.sprites import caption_vocabulary
from src.numcore.checkpoint import Checkpoint
from src.numcore.layers import Parameter
from src.numcore.tensor import Tensor, no_grad
from src.training.schemas import TrainResult
from src.training.seeding import StageStreams
from src.training.service import Trainer
from src.training.strategies import TrainingObjective

from .losses import loss_eps
from .schedule import NoiseSchedule, make_noise_schedule
from .strategies import EpsModel
from .text import TextEmbedder
from .unet import BlockAdapter, VideoUNet


def build_unet(config: RunConfig, rng: np.random.Generator) -> VideoUNet:
    return VideoUNet(
        latent_channels=config.latent_channels,
        base_channels=config.base_channels,
        block_count=config.block_count,
        text_dim=config.text_dim,
        norm_groups=config.norm_groups,
        rng=rng,
    )


def build_text_embedder(config: RunConfig, rng: np.random.Generator) -> TextEmbedder:
    return TextEmbedder(config.text_dim, rng, vocabulary=caption_vocabulary())


def schedule_for(config: RunConfig) -> NoiseSchedule:
    return make_noise_schedule(config.timesteps, config.beta_schedule)


@dataclass
class LatentVideoBatch:
    """One diffusion step's worth of scaled latent videos."""

    z0: np.ndarray
    cond: np.ndarray
    captions: list[str]
    boxes: np.ndarray


class LatentVideoBank:
    """
    Scaled adjusted latents of every video in a split.

    ``latents`` is [M, N, c, h, w]; the conditioning latent of a video is
    its frame 0.
    """

    def __init__(self, autoencoder: TransparentAutoencoder, dataset: VideoDataset):
        m, n = dataset.frames.shape[:2]
        flat = dataset.frames.reshape(m * n, *dataset.frames.shape[2:])
        z_adj = autoencoder.encode(flat).z_adj * autoencoder.latent_scale
        self.latents = z_adj.reshape(m, n, *z_adj.shape[1:]).astype(np.float32)
        self.captions = list(dataset.captions)
        self.boxes = dataset.boxes.astype(np.float32)
        self.latent_scale = autoencoder.latent_scale

    def __len__(self) -> int:
        return int(self.latents.shape[0])

    def take(self, indices: np.ndarray) -> LatentVideoBatch:
        z0 = self.latents[indices]
        return LatentVideoBatch(
            z0=z0,
            cond=np.ascontiguousarray(z0[:, 0]),
            captions=[self.captions[i] for i in indices],
            boxes=self.boxes[indices],
        )

    def sample(self, rng: np.random.Generator, batch: int) -> LatentVideoBatch:
        return self.take(rng.integers(0, len(self), size=batch))


@dataclass
class DiffusionBackbone:
    """Frozen U-Net, text encoder and schedule, as loaded from a stage-1.5 checkpoint."""

    unet: VideoUNet
    text: TextEmbedder
    schedule: NoiseSchedule
    latent_scale: float

    def named_parameters(self) -> dict[str, Parameter]:
        params = {f"unet.{n}": p for n, p in self.unet.named_parameters()}
        params.update({f"text.{n}": p for n, p in self.text.named_parameters()})
        return params

    def freeze(self) -> "DiffusionBackbone":
        self.unet.freeze()
        self.text.freeze()
        return self

    def eps_model(
        self,
        cond: np.ndarray,
        text_embed: np.ndarray,
        boxes: np.ndarray | None = None,
        adapter: BlockAdapter | None = None,
    ) -> EpsModel:
        """Gradient-free noise predictor for the sampler, with conditioning bound."""
        cond_t = Tensor.constant(cond)
        text_t = Tensor.constant(text_embed)

        def predict(x_t: np.ndarray, t: np.ndarray) -> np.ndarray:
            with no_grad():
                return self.unet(Tensor.constant(x_t), t, cond_t, text_t, boxes, adapter).data

        return predict


class VDMObjective(TrainingObjective):
    """eps-prediction on latent videos, no motion adapter."""

    stage = "vdm"

    def __init__(
        self,
        unet: VideoUNet,
        text: TextEmbedder,
        bank: LatentVideoBank,
        schedule: NoiseSchedule,
        batch: int,
    ):
        self.unet = unet
        self.text = text
        self.bank = bank
        self.schedule = schedule
        self.batch = batch

    def trainable(self) -> dict[str, Parameter]:
        params = {f"unet.{n}": p for n, p in self.unet.named_parameters()}
        params.update({f"text.{n}": p for n, p in self.text.named_parameters()})
        return params

    def next_batch(self, rng: np.random.Generator) -> LatentVideoBatch:
        return self.bank.sample(rng, self.batch)

    def loss(
        self, batch: LatentVideoBatch, rng: np.random.Generator
    ) -> tuple[Tensor, dict[str, float]]:
        text = self.text(batch.captions)
        cond = Tensor.constant(batch.cond)
        loss = loss_eps(lambda z_t, t: self.unet(z_t, t, cond, text), batch.z0, self.schedule, rng)
        return loss, {}

    def metadata_extra(self) -> dict[str, float]:
        return {"latent_scale": self.bank.latent_scale}


def load_backbone(config: RunConfig, vdm_ckpt: Checkpoint) -> DiffusionBackbone:
    """Rebuild the backbone from a stage-1.5 checkpoint; parameters come back frozen."""
    rng = np.random.default_rng(0)
    unet = build_unet(config, rng)
    text = build_text_embedder(config, rng)
    unet.load_state_dict(vdm_ckpt.subset("unet."))
    text.load_state_dict(vdm_ckpt.subset("text."))
    backbone = DiffusionBackbone(
        unet=unet,
        text=text,
        schedule=schedule_for(config),
        latent_scale=float(vdm_ckpt.metadata.extra.get("latent_scale", 1.0)),
    )
    return backbone.freeze()


def train_vdm(
    dataset: VideoDataset,
    config: RunConfig,
    autoencoder: TransparentAutoencoder,
    streams: StageStreams,
    checkpoint_path: Path,
    history_path: Path | None = None,
    upstream: dict[str, str] | None = None,
    debug: bool = False,
    show_progress: bool = True,
) -> TrainResult:
    """
    Pretrain the U-Net and text table on adjusted latents, boxes unused.

    Latents are multiplied by the VAE's ``latent_scale`` so the diffusion
    sees roughly unit-variance inputs; the factor is stored in the checkpoint.
    """
    bank = LatentVideoBank(autoencoder, dataset)
    unet = build_unet(config, streams.init)
    text = build_text_embedder(config, streams.init)
    objective = VDMObjective(unet, text, bank, schedule_for(config), config.batch)
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
