"""Noise schedules and the closed-form forward process."""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .constants import COSINE_MAX_BETA, COSINE_OFFSET, LINEAR_BETA_END, LINEAR_BETA_START
from .exceptions import LatentVideoShapeError, ScheduleError, TimestepError

ScheduleKind = Literal["linear", "cosine"]


@dataclass(frozen=True)
class NoiseSchedule:
    """
    Betas and cumulative products for t = 1..T.

    Arrays are 0-based: ``betas[t - 1]`` is beta_t. alpha_bar_0 is 1.
    """

    total: int
    betas: np.ndarray
    alpha_bars: np.ndarray
    kind: str = "linear"

    def alpha_bar(self, t: np.ndarray | int) -> np.ndarray:
        """alpha_bar_t with alpha_bar_0 = 1; ``t`` may be an array."""
        t_arr = np.asarray(t)
        padded = np.concatenate([[1.0], self.alpha_bars])
        return padded[t_arr]


def _cosine_betas(total: int) -> np.ndarray:
    steps = np.arange(total + 1, dtype=np.float64) / total
    f = np.cos((steps + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * math.pi / 2.0) ** 2
    return np.clip(1.0 - f[1:] / f[:-1], 1e-8, COSINE_MAX_BETA)


def make_noise_schedule(
    total: int,
    kind: ScheduleKind = "linear",
    betas: np.ndarray | None = None,
    beta_start: float = LINEAR_BETA_START,
    beta_end: float = LINEAR_BETA_END,
) -> NoiseSchedule:
    """
    Build a schedule.

    Args:
        total: Number of diffusion steps T (>= 1)
        kind: ``linear`` (beta_start -> beta_end) or ``cosine``
        betas: Explicit betas; overrides ``kind``

    Raises:
        ScheduleError: T < 1, wrong beta count, or any beta outside (0, 1)
    """
    if total < 1:
        raise ScheduleError(f"T must be >= 1, got {total}", key="timesteps")
    if betas is not None:
        values = np.asarray(betas, dtype=np.float64).reshape(-1)
        kind_name = "custom"
    elif kind == "linear":
        values = np.linspace(beta_start, beta_end, total, dtype=np.float64)
        kind_name = kind
    elif kind == "cosine":
        values = _cosine_betas(total)
        kind_name = kind
    else:
        raise ScheduleError(f"unknown schedule '{kind}'", key="beta_schedule")

    if values.shape != (total,):
        raise ScheduleError(f"expected {total} betas, got {values.size}", key="timesteps")
    if not np.all((values > 0.0) & (values < 1.0)):
        raise ScheduleError("every beta must lie in (0, 1)", key="beta_schedule")

    return NoiseSchedule(
        total=total,
        betas=values,
        alpha_bars=np.cumprod(1.0 - values),
        kind=kind_name,
    )


def check_timesteps(t: np.ndarray | int, schedule: NoiseSchedule) -> np.ndarray:
    t_arr = np.asarray(t)
    if t_arr.size and (t_arr.min() < 1 or t_arr.max() > schedule.total):
        raise TimestepError(t_arr.tolist(), schedule.total)
    return t_arr


def q_sample(
    z0: np.ndarray,
    t: np.ndarray | int,
    eps: np.ndarray,
    schedule: NoiseSchedule,
) -> np.ndarray:
    """
    z_t = sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) eps.

    ``t`` is a scalar or one timestep per leading-axis item of ``z0``.

    Raises:
        TimestepError: Any t outside [1, T]
        LatentVideoShapeError: ``eps`` and ``z0`` shapes differ
    """
    if eps.shape != z0.shape:
        raise LatentVideoShapeError("q_sample eps", z0.shape, eps.shape)
    t_arr = check_timesteps(t, schedule)
    ab = schedule.alpha_bar(t_arr)
    if ab.ndim:
        ab = ab.reshape((-1,) + (1,) * (z0.ndim - 1))
    out = np.sqrt(ab) * z0 + np.sqrt(1.0 - ab) * eps
    return out.astype(z0.dtype)
