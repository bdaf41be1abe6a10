"""Green-screen post-processing baseline: fill with green, then key the green out."""

import numpy as np

from src.dataio.compositing import composite_over
from src.exceptions import ConfigError

from .constants import KEY_GREEN


def composite_green(image: np.ndarray) -> np.ndarray:
    """alpha * rgb + (1 - alpha) * (0, 1, 0) over a straight-alpha [..., 4] array."""
    return composite_over(image, KEY_GREEN)


def chroma_distance(rgb: np.ndarray) -> np.ndarray:
    """Euclidean RGB distance to the key green."""
    return np.linalg.norm(rgb - np.asarray(KEY_GREEN, dtype=rgb.dtype), axis=-1)


def _feather(alpha: np.ndarray) -> np.ndarray:
    """Average each pixel with its 4-neighbours, edge-padded."""
    pad = [(0, 0)] * (alpha.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(alpha, pad, mode="edge")
    return (
        p[..., 1:-1, 1:-1] + p[..., :-2, 1:-1] + p[..., 2:, 1:-1] + p[..., 1:-1, :-2] + p[..., 1:-1, 2:]
    ) / 5.0


def chroma_key(rgb: np.ndarray, tolerance: float = 0.35, feather: bool = False) -> np.ndarray:
    """
    Key out green from [..., H, W, 3] RGB.

    Alpha is 0 where the chroma distance is below ``tolerance`` and 1
    elsewhere; ``feather`` softens the hard matte by one pixel. RGB passes
    through unchanged.

    Raises:
        ConfigError: ``tolerance`` outside (0, 1)
    """
    if not 0.0 < tolerance < 1.0:
        raise ConfigError(f"tolerance must lie in (0, 1), got {tolerance}", key="chroma_tolerance")
    alpha = (chroma_distance(rgb) >= tolerance).astype(rgb.dtype)
    if feather:
        alpha = _feather(alpha)
    return np.concatenate([rgb, alpha[..., None]], axis=-1)
