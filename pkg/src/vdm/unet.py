"""Toy video U-Net: resnet conv, spatial transformer, motion hook, temporal transformer."""

from typing import Protocol

import numpy as np

from src.numcore import functional as F
from src.numcore.layers import Attention, Conv2d, FeedForward, GroupNorm, Linear, Module, ModuleList
from src.numcore.tensor import Tensor, broadcast_to, concat, get_default_dtype

from .constants import TIME_EMBED_MULT
from .exceptions import LatentVideoShapeError


def fit_groups(channels: int, groups: int) -> int:
    """Largest divisor of ``channels`` not above ``groups``."""
    for g in range(min(groups, channels), 0, -1):
        if channels % g == 0:
            return g
    return 1


def repeat_frames(x: Tensor, frames: int) -> Tensor:
    """[B, ...] -> [B * N, ...], each item repeated for its N frames."""
    b, rest = x.shape[0], x.shape[1:]
    expanded = broadcast_to(x.reshape(b, 1, *rest), (b, frames, *rest))
    return expanded.reshape(b * frames, *rest)


class BlockAdapter(Protocol):
    """Per-block feature hook run between the spatial and temporal transformers."""

    def apply(self, index: int, features: Tensor, boxes: np.ndarray, frames: int) -> Tensor: ...


class ResBlock(Module):
    """GroupNorm-SiLU-conv twice, with the time embedding added in between."""

    def __init__(
        self, in_channels: int, out_channels: int, time_dim: int, groups: int, rng: np.random.Generator
    ):
        self.norm1 = GroupNorm(fit_groups(in_channels, groups), in_channels)
        self.conv1 = Conv2d(in_channels, out_channels, rng)
        self.time_proj = Linear(time_dim, out_channels, rng)
        self.norm2 = GroupNorm(fit_groups(out_channels, groups), out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, rng)
        self.skip = (
            Conv2d(in_channels, out_channels, rng, kernel_size=1)
            if in_channels != out_channels
            else None
        )

    def forward(self, x: Tensor, temb: Tensor) -> Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        t = self.time_proj(F.silu(temb))
        h = h + t.reshape(t.shape[0], t.shape[1], 1, 1)
        h = self.conv2(F.silu(self.norm2(h)))
        return (self.skip(x) if self.skip is not None else x) + h


class SpatialTransformer(Module):
    """Self-attention over the h*w tokens of each frame, then cross-attention to the text."""

    def __init__(self, channels: int, text_dim: int, groups: int, rng: np.random.Generator):
        self.norm = GroupNorm(fit_groups(channels, groups), channels)
        self.proj_in = Linear(channels, channels, rng)
        self.self_attn = Attention(channels, rng)
        self.cross_attn = Attention(channels, rng, context_dim=text_dim)
        self.ff = FeedForward(channels, rng)
        self.proj_out = Linear(channels, channels, rng)

    def forward(self, x: Tensor, context: Tensor) -> Tensor:
        bn, c, h, w = x.shape
        tokens = self.norm(x).reshape(bn, c, h * w).transpose(0, 2, 1)
        tokens = self.proj_in(tokens)
        tokens = tokens + self.self_attn(tokens)
        tokens = tokens + self.cross_attn(tokens, context)
        tokens = tokens + self.ff(tokens)
        tokens = self.proj_out(tokens)
        return x + tokens.transpose(0, 2, 1).reshape(bn, c, h, w)


def frame_position_embedding(frames: int, channels: int) -> Tensor:
    """Fixed sinusoidal embedding of frame indices, [1, N, C]."""
    emb = F.sinusoidal_embedding(np.arange(frames), channels, get_default_dtype())
    return Tensor.constant(emb[None])


def to_frame_sequences(x: Tensor, frames: int) -> Tensor:
    """[B*N, C, h, w] -> [B*h*w, N, C]: one sequence per spatial site."""
    bn, c, h, w = x.shape
    b = bn // frames
    seq = x.reshape(b, frames, c, h * w).transpose(0, 3, 1, 2)
    return seq.reshape(b * h * w, frames, c)


def from_frame_sequences(seq: Tensor, frames: int, height: int, width: int) -> Tensor:
    """Inverse of ``to_frame_sequences``."""
    sites, _, c = seq.shape
    b = sites // (height * width)
    x = seq.reshape(b, height * width, frames, c).transpose(0, 2, 3, 1)
    return x.reshape(b * frames, c, height, width)


class TemporalTransformer(Module):
    """Self-attention over the N frames at every spatial site."""

    def __init__(self, channels: int, groups: int, rng: np.random.Generator):
        self.channels = channels
        self.norm = GroupNorm(fit_groups(channels, groups), channels)
        self.attn = Attention(channels, rng)
        self.ff = FeedForward(channels, rng)

    def forward(self, x: Tensor, frames: int) -> Tensor:
        _, _, h, w = x.shape
        seq = to_frame_sequences(self.norm(x), frames)
        seq = seq + frame_position_embedding(frames, self.channels)
        seq = seq + self.attn(seq)
        seq = seq + self.ff(seq)
        return x + from_frame_sequences(seq, frames, h, w)


class VideoBlock(Module):
    """ResBlock -> spatial transformer -> [motion hook] -> temporal transformer."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        time_dim: int,
        text_dim: int,
        groups: int,
        rng: np.random.Generator,
    ):
        self.out_channels = out_channels
        self.res = ResBlock(in_channels, out_channels, time_dim, groups, rng)
        self.spatial = SpatialTransformer(out_channels, text_dim, groups, rng)
        self.temporal = TemporalTransformer(out_channels, groups, rng)

    def forward(
        self,
        x: Tensor,
        temb: Tensor,
        context: Tensor,
        frames: int,
        hook_index: int,
        boxes: np.ndarray | None = None,
        adapter: BlockAdapter | None = None,
    ) -> Tensor:
        h = self.spatial(self.res(x, temb), context)
        if boxes is not None and adapter is not None:
            h = adapter.apply(hook_index, h, boxes, frames)
        return self.temporal(h, frames)


class VideoUNet(Module):
    """
    Noise predictor eps_theta(z_t, t, c) over latent videos.

    The conditioned frame's latent is repeated over the N frames and
    concatenated channel-wise with the noisy latents, so the first conv sees
    2c channels. Text enters through cross-attention in every spatial
    transformer. Levels run at base * 2^l channels; every level but the
    last halves the grid.

    With ``boxes`` and an ``adapter`` given, each block routes its features
    through ``adapter.apply`` before the temporal transformer. Without them
    the forward pass never touches the adapter.

    Example:
        unet = VideoUNet(latent_channels=4, base_channels=32, block_count=2,
                         text_dim=64, norm_groups=8, rng=rng)
        eps = unet(noisy, t, cond, text)    # noisy: [B, N, 4, h, w]
    """

    def __init__(
        self,
        latent_channels: int,
        base_channels: int,
        block_count: int,
        text_dim: int,
        norm_groups: int,
        rng: np.random.Generator,
    ):
        self.latent_channels = latent_channels
        self.base_channels = base_channels
        self.text_dim = text_dim
        time_dim = base_channels * TIME_EMBED_MULT
        levels = [base_channels * 2**level for level in range(block_count)]
        self.levels = levels

        self.time_in = Linear(base_channels, time_dim, rng)
        self.time_out = Linear(time_dim, time_dim, rng)
        self.in_conv = Conv2d(2 * latent_channels, base_channels, rng)

        self.down_blocks = ModuleList()
        self.downsamples = ModuleList()
        prev = base_channels
        for level, ch in enumerate(levels):
            self.down_blocks.append(VideoBlock(prev, ch, time_dim, text_dim, norm_groups, rng))
            if level < block_count - 1:
                self.downsamples.append(Conv2d(ch, ch, rng, stride=2))
            prev = ch

        self.up_blocks = ModuleList()
        for level in range(block_count - 2, -1, -1):
            ch = levels[level]
            self.up_blocks.append(
                VideoBlock(levels[level + 1] + ch, ch, time_dim, text_dim, norm_groups, rng)
            )

        self.out_norm = GroupNorm(fit_groups(base_channels, norm_groups), base_channels)
        self.out_conv = Conv2d(base_channels, latent_channels, rng)

    def hook_channels(self) -> list[int]:
        """Feature channels at each adapter hook, in forward order."""
        return [block.out_channels for block in self.down_blocks] + [
            block.out_channels for block in self.up_blocks
        ]

    def time_embedding(self, t: np.ndarray) -> Tensor:
        emb = F.sinusoidal_embedding(t, self.base_channels, get_default_dtype())
        return self.time_out(F.silu(self.time_in(Tensor.constant(emb))))

    def _check_inputs(
        self,
        noisy: Tensor,
        t: np.ndarray,
        cond: Tensor,
        text: Tensor,
        boxes: np.ndarray | None,
    ) -> None:
        if noisy.ndim != 5 or noisy.shape[2] != self.latent_channels:
            raise LatentVideoShapeError(
                "noisy latents", f"[B, N, {self.latent_channels}, h, w]", noisy.shape
            )
        b, n, c, h, w = noisy.shape
        if cond.shape != (b, c, h, w):
            raise LatentVideoShapeError("conditioning latent", (b, c, h, w), cond.shape)
        if np.shape(t) != (b,):
            raise LatentVideoShapeError("timesteps", (b,), np.shape(t))
        if text.shape != (b, self.text_dim):
            raise LatentVideoShapeError("text embedding", (b, self.text_dim), text.shape)
        if boxes is not None and np.shape(boxes) != (b, n, 4):
            raise LatentVideoShapeError("boxes", (b, n, 4), np.shape(boxes))
        scale = 2 ** (len(self.levels) - 1)
        if h % scale or w % scale:
            raise LatentVideoShapeError("latent grid", f"multiple of {scale}", (h, w))

    def forward(
        self,
        noisy: Tensor,
        t: np.ndarray,
        cond: Tensor,
        text: Tensor,
        boxes: np.ndarray | None = None,
        adapter: BlockAdapter | None = None,
    ) -> Tensor:
        """
        Predict the noise of a latent video.

        Args:
            noisy: z_t, [B, N, c, h, w]
            t: Integer timesteps [B]
            cond: Adjusted latent of the conditioned frame, [B, c, h, w]
            text: Prompt embeddings [B, D_text]
            boxes: Normalised boxes [B, N, 4]; None bypasses the adapter
            adapter: Motion-constraint adapter

        Returns:
            eps prediction, [B, N, c, h, w]

        Raises:
            LatentVideoShapeError: Inconsistent input shapes
        """
        self._check_inputs(noisy, t, cond, text, boxes)
        b, n, c, h, w = noisy.shape

        x = concat([noisy.reshape(b * n, c, h, w), repeat_frames(cond, n)], axis=1)
        temb = repeat_frames(self.time_embedding(np.asarray(t)), n)
        context = repeat_frames(text.reshape(b, 1, self.text_dim), n)

        hook = 0
        feats = self.in_conv(x)
        skips = []
        for level, block in enumerate(self.down_blocks):
            feats = block(feats, temb, context, n, hook, boxes, adapter)
            hook += 1
            skips.append(feats)
            if level < len(self.downsamples):
                feats = self.downsamples[level](feats)

        for offset, block in enumerate(self.up_blocks):
            level = len(self.levels) - 2 - offset
            feats = concat([F.upsample_nearest2x(feats), skips[level]], axis=1)
            feats = block(feats, temb, context, n, hook, boxes, adapter)
            hook += 1

        out = self.out_conv(F.silu(self.out_norm(feats)))
        return out.reshape(b, n, c, h, w)
