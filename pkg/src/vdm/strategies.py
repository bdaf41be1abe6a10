"""Samplers that turn noise into latent videos."""

from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np

from .exceptions import SamplerError
from .schedule import NoiseSchedule

# (x_t, t[B]) -> eps prediction, no gradient.
EpsModel = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Sampler(ABC):
    """Base class for reverse-process samplers."""

    @abstractmethod
    def sample(self, model: EpsModel, x_t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """
        Run the reverse process from ``x_t`` (pure noise at t = T) to an x_0 estimate.

        Args:
            model: Noise predictor
            x_t: Starting noise, leading axis is the batch
            rng: Noise for stochastic updates

        Returns:
            x_0 estimate, same shape as ``x_t``
        """
        pass


def ddim_timesteps(total: int, steps: int) -> np.ndarray:
    """
    Evenly spaced timesteps from T down to 1.

    Raises:
        SamplerError: ``steps`` outside [1, T]
    """
    if steps < 1:
        raise SamplerError(f"sampler needs at least one step, got {steps}", key="sampler_steps")
    if steps > total:
        raise SamplerError(f"{steps} sampler steps exceed T={total}", key="sampler_steps")
    grid = np.unique(np.round(np.linspace(1, total, steps)).astype(np.int64))
    return grid[::-1]


class DDIMSampler(Sampler):
    """
    DDIM over a strided subset of the training timesteps.

    eta = 0 is deterministic given the starting noise; eta = 1 matches
    ancestral sampling variance.

    Example:
        sampler = DDIMSampler(schedule, steps=50)
        z0 = sampler.sample(model, rng.standard_normal(shape), rng)
    """

    def __init__(self, schedule: NoiseSchedule, steps: int, eta: float = 0.0):
        if not 0.0 <= eta <= 1.0:
            raise SamplerError(f"eta must lie in [0, 1], got {eta}", key="eta")
        self.schedule = schedule
        self.eta = eta
        self.timesteps = ddim_timesteps(schedule.total, steps)

    def sample(self, model: EpsModel, x_t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x_t, dtype=np.float64)
        batch = x.shape[0]
        for i, t in enumerate(self.timesteps):
            ab_t = float(self.schedule.alpha_bar(int(t)))
            prev = int(self.timesteps[i + 1]) if i + 1 < len(self.timesteps) else 0
            ab_prev = float(self.schedule.alpha_bar(prev))

            eps = np.asarray(model(x.astype(x_t.dtype), np.full(batch, t)), dtype=np.float64)
            x0 = (x - np.sqrt(1.0 - ab_t) * eps) / np.sqrt(ab_t)

            sigma = (
                self.eta * np.sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * np.sqrt(1.0 - ab_t / ab_prev)
            )
            direction = np.sqrt(max(1.0 - ab_prev - sigma**2, 0.0)) * eps
            x = np.sqrt(ab_prev) * x0 + direction
            if sigma > 0.0:
                x = x + sigma * rng.standard_normal(x.shape)
        return x.astype(x_t.dtype)
