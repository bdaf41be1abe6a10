"""RGB inpainting of transparent regions.

Colour under partially or fully transparent pixels is undefined in straight
alpha. Before the RGB channels are encoded, every pixel with alpha < 1 is
replaced by Jacobi neighbour averaging seeded from the opaque pixels, so
the RGB image has no hard seams where the matte ends.
"""

import numpy as np

from .constants import SMOOTH_MAX_ITERS, SMOOTH_TOLERANCE, TRANSPARENT_FILL


def smooth_rgb(
    rgb: np.ndarray,
    alpha: np.ndarray,
    max_iters: int = SMOOTH_MAX_ITERS,
    tolerance: float = SMOOTH_TOLERANCE,
) -> np.ndarray:
    """
    Inpaint RGB wherever alpha < 1.

    Opaque pixels are copied unchanged. Unknown pixels start at the mean
    opaque colour of their image and relax toward the 4-neighbour average
    until the largest update drops below ``tolerance`` or ``max_iters`` is
    reached. Images are iterated independently, so the result for one image
    does not depend on the rest of the stack. The output depends only on
    the opaque pixels, which makes the operation idempotent.

    Args:
        rgb: [..., H, W, 3] straight colour
        alpha: [..., H, W] or [..., H, W, 1] matte

    Returns:
        Smoothed RGB with the shape and dtype of ``rgb``; images with no
        opaque pixel become uniform 0.5
    """
    lead = rgb.shape[:-3]
    h, w = rgb.shape[-3], rgb.shape[-2]
    colours = rgb.reshape(-1, h, w, 3).astype(np.float64)
    known = alpha.reshape(-1, h, w) >= 1.0

    out = np.empty_like(colours)
    has_known = known.any(axis=(1, 2))
    out[~has_known] = TRANSPARENT_FILL

    active = np.flatnonzero(has_known & ~known.all(axis=(1, 2)))
    full = np.flatnonzero(known.all(axis=(1, 2)))
    out[full] = colours[full]

    if active.size:
        src = colours[active]
        mask = known[active][..., None]
        counts = mask.sum(axis=(1, 2))
        means = (src * mask).sum(axis=(1, 2)) / counts
        cur = np.where(mask, src, means[:, None, None, :])
        running = np.ones(len(active), dtype=bool)
        for _ in range(max_iters):
            idx = np.flatnonzero(running)
            if idx.size == 0:
                break
            sub = cur[idx]
            padded = np.pad(sub, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
            avg = 0.25 * (
                padded[:, :-2, 1:-1] + padded[:, 2:, 1:-1] + padded[:, 1:-1, :-2] + padded[:, 1:-1, 2:]
            )
            new = np.where(mask[idx], src[idx], avg)
            delta = np.abs(new - sub).max(axis=(1, 2, 3))
            cur[idx] = new
            running[idx[delta < tolerance]] = False
        out[active] = cur

    return out.reshape(*lead, h, w, 3).astype(rgb.dtype)
