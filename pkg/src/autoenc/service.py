"""Stage 0 and stage 1: vanilla VAE and transparent VAE training and inference."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.config import RunConfig
from src.numcore.checkpoint import Checkpoint
from src.numcore.layers import Parameter
from src.numcore.tensor import Tensor, no_grad
from src.training.schemas import TrainResult
from src.training.seeding import StageStreams
from src.training.service import Trainer
from src.training.strategies import TrainingObjective

from .constants import LATENT_SCALE_SAMPLES
from .exceptions import AutoencError
from .losses import frozen_posterior_mean, identity_error, loss_recon, loss_tvae, loss_vae, vae_kl
from .models import TVAEDecoder, TVAEEncoder, VanillaVAE
from .smoothing import smooth_rgb

INFERENCE_CHUNK = 32


def to_nchw(images: np.ndarray) -> np.ndarray:
    """[B, H, W, C] -> [B, C, H, W]."""
    return np.ascontiguousarray(images.transpose(0, 3, 1, 2))


def to_nhwc(images: np.ndarray) -> np.ndarray:
    """[B, C, H, W] -> [B, H, W, C]."""
    return np.ascontiguousarray(images.transpose(0, 2, 3, 1))


def build_vae(config: RunConfig, rng: np.random.Generator) -> VanillaVAE:
    return VanillaVAE(config.latent_channels, config.vae_channels, rng)


def build_tvae(config: RunConfig, rng: np.random.Generator) -> tuple[TVAEEncoder, TVAEDecoder]:
    encoder = TVAEEncoder(config.latent_channels, config.tvae_encoder_channels, rng)
    decoder = TVAEDecoder(config.latent_channels, config.tvae_decoder_channels, rng)
    return encoder, decoder


@dataclass
class FrameBatch:
    """NCHW arrays for one autoencoder step."""

    rgb: np.ndarray
    smooth: np.ndarray
    alpha: np.ndarray


class FrameBank:
    """
    Every frame of a split, flattened, with its smoothed RGB precomputed.

    Args:
        frames: [M, N, H, W, 4] or [F, H, W, 4] straight-alpha RGBA
    """

    def __init__(self, frames: np.ndarray):
        flat = frames.reshape(-1, *frames.shape[-3:]).astype(np.float32)
        self.rgba = flat
        self.smooth = smooth_rgb(flat[..., :3], flat[..., 3])

    def __len__(self) -> int:
        return int(self.rgba.shape[0])

    def take(self, indices: np.ndarray) -> FrameBatch:
        rgba = self.rgba[indices]
        return FrameBatch(
            rgb=to_nchw(rgba[..., :3]),
            smooth=to_nchw(self.smooth[indices]),
            alpha=to_nchw(rgba[..., 3:4]),
        )

    def sample(self, rng: np.random.Generator, batch: int) -> FrameBatch:
        return self.take(rng.integers(0, len(self), size=batch))


def measure_latent_scale(vae: VanillaVAE, bank: FrameBank) -> float:
    """1 / std of posterior means over a fixed prefix of the frame bank."""
    count = min(len(bank), LATENT_SCALE_SAMPLES)
    means = []
    with no_grad():
        for start in range(0, count, INFERENCE_CHUNK):
            batch = bank.take(np.arange(start, min(start + INFERENCE_CHUNK, count)))
            mean, _ = vae.encode(Tensor(batch.smooth))
            means.append(mean.data)
    std = float(np.concatenate(means).std())
    return 1.0 / std if std > 1e-8 else 1.0


class VAEObjective(TrainingObjective):
    """Stage 0: reconstruction + KL on smoothed RGB frames."""

    stage = "vae"

    def __init__(self, vae: VanillaVAE, bank: FrameBank, batch: int, kl_weight: float):
        self.vae = vae
        self.bank = bank
        self.batch = batch
        self.kl_weight = kl_weight

    def trainable(self) -> dict[str, Parameter]:
        return {f"vae.{n}": p for n, p in self.vae.named_parameters()}

    def next_batch(self, rng: np.random.Generator) -> FrameBatch:
        return self.bank.sample(rng, self.batch)

    def loss(self, batch: FrameBatch, rng: np.random.Generator) -> tuple[Tensor, dict[str, float]]:
        images = Tensor(batch.smooth)
        mean, logvar = self.vae.encode(images)
        recon = self.vae.decode(self.vae.sample(mean, logvar, rng))
        total = loss_vae(images, recon, mean, logvar, self.kl_weight)
        return total, {"kl": vae_kl(mean, logvar).item()}

    def metadata_extra(self) -> dict[str, float]:
        return {"latent_scale": measure_latent_scale(self.vae, self.bank)}


class TVAEObjective(TrainingObjective):
    """
    Stage 1: alpha-aware encoder and decoder against the frozen VAE.

    Per step: z = E*(smooth), z_alpha = E_T(rgb, alpha), z_adj = z + z_alpha,
    Î = D*(z_adj), (Î_c, Î_alpha) = D_T(Î, z_adj); the loss is
    L_recon(smooth, alpha) + lambda * ||smooth - Î||^2.
    """

    stage = "tvae"

    def __init__(
        self,
        vae: VanillaVAE,
        encoder: TVAEEncoder,
        decoder: TVAEDecoder,
        bank: FrameBank,
        batch: int,
        lam: float,
    ):
        self.vae = vae.freeze()
        self.encoder = encoder
        self.decoder = decoder
        self.bank = bank
        self.batch = batch
        self.lam = lam

    def trainable(self) -> dict[str, Parameter]:
        params = {f"encoder.{n}": p for n, p in self.encoder.named_parameters()}
        params.update({f"decoder.{n}": p for n, p in self.decoder.named_parameters()})
        return params

    def frozen(self) -> dict[str, Parameter]:
        return {f"vae.{n}": p for n, p in self.vae.named_parameters()}

    def next_batch(self, rng: np.random.Generator) -> FrameBatch:
        return self.bank.sample(rng, self.batch)

    def loss(self, batch: FrameBatch, rng: np.random.Generator) -> tuple[Tensor, dict[str, float]]:
        smooth = Tensor(batch.smooth)
        alpha = Tensor(batch.alpha)
        z = frozen_posterior_mean(self.vae, smooth)
        z_alpha = self.encoder(Tensor(batch.rgb), alpha)
        z_adj = z + z_alpha
        rgb_hat = self.vae.decode(z_adj)
        identity = identity_error(smooth, rgb_hat)
        rgb_pred, alpha_pred = self.decoder(rgb_hat, z_adj)
        recon = loss_recon(smooth, alpha, rgb_pred, alpha_pred)
        ratio = float(np.linalg.norm(z_alpha.data) / max(np.linalg.norm(z.data), 1e-12))
        metrics = {"recon": recon.item(), "identity": identity.item(), "perturbation": ratio}
        return loss_tvae(recon, identity, self.lam), metrics


@dataclass
class AdjustedLatents:
    """Latent triplet for a frame batch, NCHW arrays."""

    z: np.ndarray
    z_alpha: np.ndarray
    z_adj: np.ndarray


class TransparentAutoencoder:
    """
    Frozen VAE plus trained TVAE, used read-only after stage 1.

    Example:
        auto = TransparentAutoencoder.from_checkpoints(config, vae_ckpt, tvae_ckpt)
        latents = auto.encode(frames)            # frames: [B, H, W, 4]
        rgba = auto.decode(latents.z_adj)        # [B, H, W, 4]
    """

    def __init__(
        self,
        vae: VanillaVAE,
        encoder: TVAEEncoder | None,
        decoder: TVAEDecoder | None,
        latent_scale: float = 1.0,
    ):
        self.vae = vae.freeze()
        self.encoder = encoder.freeze() if encoder is not None else None
        self.decoder = decoder.freeze() if decoder is not None else None
        self.latent_scale = latent_scale

    @classmethod
    def from_checkpoints(
        cls, config: RunConfig, vae_ckpt: Checkpoint, tvae_ckpt: Checkpoint | None = None
    ) -> "TransparentAutoencoder":
        rng = np.random.default_rng(0)
        vae = build_vae(config, rng)
        vae.load_state_dict(vae_ckpt.subset("vae."))
        encoder = decoder = None
        if tvae_ckpt is not None:
            encoder, decoder = build_tvae(config, rng)
            encoder.load_state_dict(tvae_ckpt.subset("encoder."))
            decoder.load_state_dict(tvae_ckpt.subset("decoder."))
        scale = float(vae_ckpt.metadata.extra.get("latent_scale", 1.0))
        return cls(vae, encoder, decoder, latent_scale=scale)

    def _chunks(self, count: int) -> list[slice]:
        return [slice(s, min(s + INFERENCE_CHUNK, count)) for s in range(0, count, INFERENCE_CHUNK)]

    def encode(self, frames: np.ndarray) -> AdjustedLatents:
        """Adjusted latents of [B, H, W, 4] frames (RGB smoothed before the VAE)."""
        smooth = to_nchw(smooth_rgb(frames[..., :3], frames[..., 3]))
        rgb = to_nchw(frames[..., :3])
        alpha = to_nchw(frames[..., 3:4])
        zs, zas = [], []
        with no_grad():
            for part in self._chunks(frames.shape[0]):
                z = self.vae.encode(Tensor(smooth[part]))[0].data
                if self.encoder is not None:
                    za = self.encoder(Tensor(rgb[part]), Tensor(alpha[part])).data
                else:
                    za = np.zeros_like(z)
                zs.append(z)
                zas.append(za)
        z_all = np.concatenate(zs)
        za_all = np.concatenate(zas)
        return AdjustedLatents(z=z_all, z_alpha=za_all, z_adj=z_all + za_all)

    def decode_rgb(self, z: np.ndarray) -> np.ndarray:
        """Frozen-VAE RGB reconstruction, NCHW."""
        with no_grad():
            return np.concatenate(
                [self.vae.decode(Tensor(z[part])).data for part in self._chunks(z.shape[0])]
            )

    def decode(self, z_adj: np.ndarray) -> np.ndarray:
        """RGBA frames [B, H, W, 4] from adjusted latents [B, c, h, w]."""
        if self.decoder is None:
            raise AutoencError("decode needs a trained TVAE decoder")
        outputs = []
        with no_grad():
            for part in self._chunks(z_adj.shape[0]):
                z = Tensor(z_adj[part])
                rgb_hat = self.vae.decode(z)
                rgb, alpha = self.decoder(rgb_hat, z)
                outputs.append(np.concatenate([rgb.data, alpha.data], axis=1))
        return to_nhwc(np.concatenate(outputs))


def train_vae(
    frames: np.ndarray,
    config: RunConfig,
    streams: StageStreams,
    checkpoint_path: Path,
    history_path: Path | None = None,
    show_progress: bool = True,
) -> TrainResult:
    """
    Stage 0: train the vanilla VAE on smoothed RGB of every training frame.

    The checkpoint records ``latent_scale`` (1 / std of posterior means).
    """
    vae = build_vae(config, streams.init)
    objective = VAEObjective(vae, FrameBank(frames), config.batch, config.kl_weight)
    trainer = Trainer(
        objective, config, streams, checkpoint_path, history_path, show_progress=show_progress
    )
    return trainer.run()


def train_tvae(
    frames: np.ndarray,
    config: RunConfig,
    vae_ckpt: Checkpoint,
    streams: StageStreams,
    checkpoint_path: Path,
    history_path: Path | None = None,
    upstream: dict[str, str] | None = None,
    debug: bool = False,
    show_progress: bool = True,
) -> TrainResult:
    """Stage 1: train the TVAE encoder and decoder against the frozen VAE."""
    vae = build_vae(config, np.random.default_rng(0))
    vae.load_state_dict(vae_ckpt.subset("vae."))
    encoder, decoder = build_tvae(config, streams.init)
    objective = TVAEObjective(vae, encoder, decoder, FrameBank(frames), config.batch, config.lam)
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
