"""Alpha conversions used by compositing.

Storage is straight alpha; premultiplied values only exist inside these
helpers and the compositing code that calls them.
"""

import numpy as np

# Below this alpha a premultiplied colour carries no recoverable information.
UNPREMULTIPLY_FLOOR = 1.0 / 255.0


def premultiply(image: np.ndarray) -> np.ndarray:
    """rgb' = rgb * alpha over a [..., 4] array; alpha is passed through."""
    out = np.array(image, copy=True)
    out[..., :3] = image[..., :3] * image[..., 3:4]
    return out


def unpremultiply(image: np.ndarray) -> np.ndarray:
    """Inverse of ``premultiply`` where alpha > 0; rgb is set to 0 where alpha is 0."""
    out = np.array(image, copy=True)
    alpha = image[..., 3:4]
    safe = np.where(alpha > 0, alpha, 1.0)
    out[..., :3] = np.where(alpha > 0, image[..., :3] / safe, 0.0)
    return out


def composite_over(image: np.ndarray, background: tuple[float, float, float]) -> np.ndarray:
    """Straight-alpha over operator: alpha * rgb + (1 - alpha) * background."""
    alpha = image[..., 3:4]
    bg = np.asarray(background, dtype=image.dtype)
    return alpha * image[..., :3] + (1.0 - alpha) * bg
