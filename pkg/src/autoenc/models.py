"""Vanilla VAE and the transparent encoder/decoder pair.

All modules take NCHW tensors. The vanilla VAE maps RGB to a latent grid
downscaled 8x; the TVAE encoder maps raw RGB plus alpha to a perturbation
of that grid; the TVAE decoder recovers RGBA from the VAE's RGB
reconstruction and the adjusted latent.
"""

import numpy as np

from src.numcore import functional as F
from src.numcore.layers import Conv2d, Module, ModuleList
from src.numcore.tensor import Tensor, concat

from .constants import LATENT_DOWNSCALE
from .exceptions import LatentShapeError


def check_image_geometry(x: Tensor, channels: int, what: str) -> None:
    if x.ndim != 4 or x.shape[1] != channels:
        raise LatentShapeError(what, f"[B, {channels}, H, W]", x.shape)
    h, w = x.shape[2], x.shape[3]
    if h % LATENT_DOWNSCALE or w % LATENT_DOWNSCALE:
        raise LatentShapeError(what, f"H, W divisible by {LATENT_DOWNSCALE}", (h, w))


class VanillaVAE(Module):
    """
    Convolutional VAE with an 8x spatial bottleneck.

    Encoder: 3x3 stem, then three levels of (stride-2 conv, conv) with
    SiLU, then a 1x1 projection to mean and log-variance. Decoder mirrors
    it with nearest-neighbour upsampling and ends in a sigmoid.
    """

    def __init__(self, latent_channels: int, channels: tuple[int, ...], rng: np.random.Generator):
        self.latent_channels = latent_channels
        c0, c1, c2 = channels
        self.enc_in = Conv2d(3, c0, rng)
        self.enc_down = ModuleList(
            [Conv2d(c0, c0, rng, stride=2), Conv2d(c0, c1, rng, stride=2), Conv2d(c1, c2, rng, stride=2)]
        )
        self.enc_mix = ModuleList([Conv2d(c0, c0, rng), Conv2d(c1, c1, rng), Conv2d(c2, c2, rng)])
        self.enc_out = Conv2d(c2, 2 * latent_channels, rng, kernel_size=1)

        self.dec_in = Conv2d(latent_channels, c2, rng)
        self.dec_up = ModuleList(
            [Conv2d(c2, c1, rng), Conv2d(c1, c0, rng), Conv2d(c0, c0, rng)]
        )
        self.dec_out = Conv2d(c0, 3, rng)

    def encode(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """
        Posterior parameters for RGB images.

        Args:
            x: [B, 3, H, W] in [0, 1], H and W divisible by 8

        Returns:
            Tuple of (mean, logvar), each [B, c, H/8, W/8]
        """
        check_image_geometry(x, 3, "vae_encode")
        h = F.silu(self.enc_in(x))
        for down, mix in zip(self.enc_down, self.enc_mix):
            h = F.silu(down(h))
            h = F.silu(mix(h))
        stats = self.enc_out(h)
        c = self.latent_channels
        return stats[:, :c], stats[:, c:]

    @staticmethod
    def sample(mean: Tensor, logvar: Tensor, rng: np.random.Generator) -> Tensor:
        """Reparameterised draw; a log-variance of -inf returns the mean exactly."""
        eps = Tensor.constant(rng.standard_normal(mean.shape).astype(mean.dtype))
        with np.errstate(over="ignore"):
            std = (logvar * 0.5).exp()
        return mean + std * eps

    def decode(self, z: Tensor) -> Tensor:
        """Map a latent grid [B, c, h, w] to RGB [B, 3, 8h, 8w] in [0, 1]."""
        if z.ndim != 4 or z.shape[1] != self.latent_channels:
            raise LatentShapeError("vae_decode", f"[B, {self.latent_channels}, h, w]", z.shape)
        h = F.silu(self.dec_in(z))
        for conv in self.dec_up:
            h = F.silu(conv(F.upsample_nearest2x(h)))
        return F.sigmoid(self.dec_out(h))


class TVAEEncoder(Module):
    """
    Alpha-aware encoder producing the latent perturbation z_alpha.

    Input is the 4-channel concat of raw RGB and alpha. A 3x3 stem is
    followed by three stride-2 SiLU convs; the final 1x1 projection starts
    at zero so an untrained encoder leaves the RGB latent untouched.
    """

    def __init__(self, latent_channels: int, channels: tuple[int, ...], rng: np.random.Generator):
        stem, d1, d2, d3 = channels
        self.stem = Conv2d(4, stem, rng)
        self.down = ModuleList(
            [Conv2d(stem, d1, rng, stride=2), Conv2d(d1, d2, rng, stride=2), Conv2d(d2, d3, rng, stride=2)]
        )
        self.out = Conv2d(d3, latent_channels, rng, kernel_size=1, zero_init=True)

    def forward(self, rgb: Tensor, alpha: Tensor) -> Tensor:
        """
        Args:
            rgb: [B, 3, H, W] raw colour
            alpha: [B, 1, H, W]

        Returns:
            z_alpha of shape [B, c, H/8, W/8]
        """
        check_image_geometry(rgb, 3, "tvae_encode")
        if alpha.shape != (rgb.shape[0], 1) + rgb.shape[2:]:
            raise LatentShapeError("tvae_encode alpha", (rgb.shape[0], 1) + rgb.shape[2:], alpha.shape)
        h = F.silu(self.stem(concat([rgb, alpha], axis=1)))
        for conv in self.down:
            h = F.silu(conv(h))
        return self.out(h)


class TVAEDecoder(Module):
    """
    Two-level pixel-space U-Net that recovers RGBA.

    The VAE's RGB reconstruction runs through the U-Net; the adjusted
    latent is bilinearly resized to the bottleneck and concatenated there.
    Four output channels pass through a sigmoid.
    """

    def __init__(self, latent_channels: int, channels: tuple[int, ...], rng: np.random.Generator):
        c0, c1, c2 = channels
        self.inp = Conv2d(3, c0, rng)
        self.down1 = Conv2d(c0, c1, rng, stride=2)
        self.down2 = Conv2d(c1, c2, rng, stride=2)
        self.mid = Conv2d(c2 + latent_channels, c2, rng)
        self.up1 = Conv2d(c2 + c1, c1, rng)
        self.up0 = Conv2d(c1 + c0, c0, rng)
        self.out = Conv2d(c0, 4, rng)

    def forward(self, rgb_hat: Tensor, z_adj: Tensor) -> tuple[Tensor, Tensor]:
        """
        Args:
            rgb_hat: [B, 3, H, W] frozen-VAE reconstruction
            z_adj: [B, c, H/8, W/8] adjusted latent

        Returns:
            Tuple of (rgb [B, 3, H, W], alpha [B, 1, H, W]), both in [0, 1]
        """
        check_image_geometry(rgb_hat, 3, "tvae_decode")
        b, _, height, width = rgb_hat.shape
        if z_adj.shape[0] != b or z_adj.shape[2:] != (height // 8, width // 8):
            raise LatentShapeError("tvae_decode latent", (b, "c", height // 8, width // 8), z_adj.shape)
        skip0 = F.silu(self.inp(rgb_hat))
        skip1 = F.silu(self.down1(skip0))
        h = F.silu(self.down2(skip1))
        latent = F.bilinear_resize(z_adj, h.shape[2], h.shape[3])
        h = F.silu(self.mid(concat([h, latent], axis=1)))
        h = F.silu(self.up1(concat([F.upsample_nearest2x(h), skip1], axis=1)))
        h = F.silu(self.up0(concat([F.upsample_nearest2x(h), skip0], axis=1)))
        out = F.sigmoid(self.out(h))
        return out[:, :3], out[:, 3:]
