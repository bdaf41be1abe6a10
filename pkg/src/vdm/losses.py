"""Epsilon-prediction objective."""

from collections.abc import Callable

import numpy as np

from src.numcore.functional import sum_squared_error
from src.numcore.tensor import Tensor, get_default_dtype

from .schedule import NoiseSchedule, q_sample

Denoiser = Callable[[Tensor, np.ndarray], Tensor]


def sample_timesteps(rng: np.random.Generator, batch: int, schedule: NoiseSchedule) -> np.ndarray:
    """Uniform integer timesteps in [1, T]."""
    return rng.integers(1, schedule.total + 1, size=batch)


def loss_eps(
    denoiser: Denoiser,
    z0: np.ndarray,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> Tensor:
    """
    ||eps - eps_theta(z_t, t)||^2, summed over elements and averaged over the batch.

    Args:
        denoiser: Maps (z_t, t[B]) to an eps prediction shaped like z_t
        z0: Clean latents, leading axis is the batch
        schedule: Noise schedule
        rng: Source of t and eps
    """
    batch = z0.shape[0]
    t = sample_timesteps(rng, batch, schedule)
    eps = rng.standard_normal(z0.shape).astype(get_default_dtype())
    z_t = q_sample(z0.astype(eps.dtype), t, eps, schedule)
    return sum_squared_error(denoiser(Tensor.constant(z_t), t), eps, batch)
