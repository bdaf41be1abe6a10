"""Autoencoder objectives.

Reduction everywhere: sum over pixels and channels, mean over the batch.
"""

from src.exceptions import ConfigError
from src.numcore.functional import sum_squared_error
from src.numcore.tensor import Tensor, no_grad

from .models import VanillaVAE


def vae_kl(mean: Tensor, logvar: Tensor) -> Tensor:
    """KL(q(z|x) || N(0, I)), summed per sample and averaged over the batch."""
    batch = mean.shape[0]
    terms = mean * mean + logvar.exp() - 1.0 - logvar
    return terms.sum() * (0.5 / batch)


def loss_vae(images: Tensor, recon: Tensor, mean: Tensor, logvar: Tensor, kl_weight: float) -> Tensor:
    """Reconstruction plus weighted KL for the vanilla VAE."""
    return sum_squared_error(recon, images, images.shape[0]) + vae_kl(mean, logvar) * kl_weight


def frozen_posterior_mean(vae: VanillaVAE, images: Tensor) -> Tensor:
    """E*(I): posterior mean of the frozen VAE, recorded outside the graph."""
    with no_grad():
        mean, _ = vae.encode(images)
    return mean.detach()


def identity_error(images: Tensor, recon: Tensor) -> Tensor:
    return sum_squared_error(recon, images, images.shape[0])


def loss_identity(images: Tensor, z_alpha: Tensor, vae: VanillaVAE) -> Tensor:
    """
    ||I - D*(E*(I) + z_alpha)||^2 against the frozen VAE.

    The VAE's parameters must be frozen; gradient reaches only ``z_alpha``
    and whatever produced it.
    """
    z = frozen_posterior_mean(vae, images)
    return identity_error(images, vae.decode(z + z_alpha))


def loss_recon(
    rgb_target: Tensor,
    alpha_target: Tensor,
    rgb_pred: Tensor,
    alpha_pred: Tensor,
) -> Tensor:
    """||I_c - Î_c||^2 + ||I_alpha - Î_alpha||^2; the RGB target is the smoothed image."""
    batch = rgb_target.shape[0]
    return sum_squared_error(rgb_pred, rgb_target, batch) + sum_squared_error(
        alpha_pred, alpha_target, batch
    )


def loss_tvae(recon: Tensor, identity: Tensor, lam: float) -> Tensor:
    """
    L_recon + lambda * L_identity.

    Raises:
        ConfigError: lambda < 0
    """
    if lam < 0:
        raise ConfigError("must be >= 0", key="lambda")
    if lam == 0:
        return recon
    return recon + identity * lam
