"""Bounding boxes derived from alpha mattes.

Pixel boxes are inclusive integer corners ``(x_min, y_min, x_max, y_max)``.
Normalised boxes divide x by (W - 1) and y by (H - 1), so a full-frame box
maps to exactly (0, 0, 1, 1).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import BoxError, BoxFileError

logger = logging.getLogger(__name__)

FULL_FRAME = (0.0, 0.0, 1.0, 1.0)


class PixelBox(NamedTuple):
    x_min: int
    y_min: int
    x_max: int
    y_max: int


@dataclass(frozen=True)
class BoxSequence:
    """
    Normalised per-frame boxes.

    ``boxes`` has shape [N, 4]; ``valid`` flags frames whose alpha had any
    foreground. Invalid rows are all zero.
    """

    boxes: np.ndarray
    valid: np.ndarray

    def __post_init__(self) -> None:
        if self.boxes.ndim != 2 or self.boxes.shape[1] != 4:
            raise BoxError(-1, f"expected shape [N, 4], got {self.boxes.shape}")
        if self.valid.shape != (self.boxes.shape[0],):
            raise BoxError(-1, "valid flags do not match the box count")

    def __len__(self) -> int:
        return int(self.boxes.shape[0])

    @classmethod
    def repeat(cls, box: tuple[float, float, float, float], frames: int) -> "BoxSequence":
        rows = np.tile(np.asarray(box, dtype=np.float64), (frames, 1))
        return cls(boxes=rows, valid=np.ones(frames, dtype=bool))


def _axis_bounds(mask: np.ndarray) -> tuple[int, int]:
    hits = np.flatnonzero(mask)
    return int(hits[0]), int(hits[-1])


def extract_bbox(alpha: np.ndarray, threshold: float = 1.0 / 255.0) -> PixelBox | None:
    """
    Tight axis-aligned box around every pixel with alpha above ``threshold``.

    Disconnected components are merged into one union box.

    Args:
        alpha: [H, W] (or [H, W, 1]) alpha matte
        threshold: Strict foreground threshold

    Returns:
        PixelBox, or None when no pixel is foreground
    """
    mask = np.asarray(alpha).reshape(alpha.shape[0], alpha.shape[1]) > threshold
    cols = mask.any(axis=0)
    if not cols.any():
        return None
    rows = mask.any(axis=1)
    x_min, x_max = _axis_bounds(cols)
    y_min, y_max = _axis_bounds(rows)
    return PixelBox(x_min, y_min, x_max, y_max)


def extract_box_sequence(
    alphas: np.ndarray, threshold: float = 1.0 / 255.0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-frame pixel boxes for an [N, H, W] alpha stack.

    Returns:
        Tuple of (int boxes [N, 4] with zero rows for empty frames, valid flags [N])
    """
    frames = alphas.shape[0]
    pixel = np.zeros((frames, 4), dtype=np.int64)
    valid = np.zeros(frames, dtype=bool)
    for i in range(frames):
        box = extract_bbox(alphas[i], threshold)
        if box is not None:
            pixel[i] = box
            valid[i] = True
    return pixel, valid


def _scale(height: int, width: int) -> np.ndarray:
    return np.array(
        [max(width - 1, 1), max(height - 1, 1), max(width - 1, 1), max(height - 1, 1)],
        dtype=np.float64,
    )


def normalize_boxes(
    pixel_boxes: np.ndarray,
    height: int,
    width: int,
    valid: np.ndarray | None = None,
) -> BoxSequence:
    """
    Map inclusive pixel corners to [0, 1] coordinates.

    Raises:
        BoxError: A valid box leaves the image or has inverted corners
    """
    pixel = np.asarray(pixel_boxes, dtype=np.float64).reshape(-1, 4)
    flags = np.ones(len(pixel), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    for i, (x0, y0, x1, y1) in enumerate(pixel):
        if not flags[i]:
            continue
        if x0 > x1 or y0 > y1:
            raise BoxError(i, f"inverted corners {tuple(pixel[i])}")
        if x0 < 0 or y0 < 0 or x1 > width - 1 or y1 > height - 1:
            raise BoxError(i, f"{tuple(pixel[i])} outside a {width}x{height} frame")
    normalised = pixel / _scale(height, width)
    normalised[~flags] = 0.0
    return BoxSequence(boxes=normalised, valid=flags)


def denormalize_boxes(seq: BoxSequence, height: int, width: int) -> np.ndarray:
    """Inverse of ``normalize_boxes`` in real-valued pixel coordinates."""
    return seq.boxes * _scale(height, width)


def dilate_box(box: PixelBox, dilation: int, height: int, width: int) -> PixelBox:
    """Grow a box by ``dilation`` pixels on every side, clamped to the frame."""
    return PixelBox(
        max(box.x_min - dilation, 0),
        max(box.y_min - dilation, 0),
        min(box.x_max + dilation, width - 1),
        min(box.y_max + dilation, height - 1),
    )


def pixel_box_from_normalised(row: np.ndarray, height: int, width: int) -> PixelBox:
    """Round a normalised box to the nearest inclusive pixel corners."""
    x0, y0, x1, y1 = np.rint(row * _scale(height, width)).astype(int)
    return PixelBox(int(x0), int(y0), int(x1), int(y1))


def validate_box_sequence(seq: BoxSequence) -> BoxSequence:
    """
    Check that every valid row lies in [0, 1] with ordered corners.

    Raises:
        BoxError: On the first offending row
    """
    for i, row in enumerate(seq.boxes):
        if not seq.valid[i]:
            continue
        if not np.isfinite(row).all() or (row < 0).any() or (row > 1).any():
            raise BoxError(i, f"coordinates {tuple(row)} not in [0, 1]")
        if row[0] > row[2] or row[1] > row[3]:
            raise BoxError(i, f"inverted corners {tuple(row)}")
    return seq


def write_box_file(path: Path, seq: BoxSequence) -> None:
    """Write one ``i x_min y_min x_max y_max`` line per frame."""
    lines = [
        f"{i} " + " ".join(f"{v:.8f}" for v in row) for i, row in enumerate(seq.boxes)
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_box_file(path: Path, frames: int | None = None) -> BoxSequence:
    """
    Parse a box file written by ``write_box_file`` or by hand.

    Rows must be numbered 0..N-1 in order. All rows are treated as valid.

    Raises:
        BoxFileError: Unreadable file, malformed line, gap in indices, or wrong count
        BoxError: Coordinates outside [0, 1] or inverted
    """
    if not path.exists():
        raise BoxFileError(str(path), "file not found")
    rows: list[list[float]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise BoxFileError(str(path), f"line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            index = int(parts[0])
            coords = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise BoxFileError(str(path), f"line {lineno}: {exc}") from exc
        if index != len(rows):
            raise BoxFileError(str(path), f"line {lineno}: expected index {len(rows)}, got {index}")
        rows.append(coords)
    if not rows:
        raise BoxFileError(str(path), "no boxes")
    if frames is not None and len(rows) != frames:
        raise BoxFileError(str(path), f"expected {frames} boxes, got {len(rows)}")
    seq = BoxSequence(boxes=np.asarray(rows, dtype=np.float64), valid=np.ones(len(rows), dtype=bool))
    return validate_box_sequence(seq)


def inference_boxes(
    cond_alpha: np.ndarray,
    frames: int,
    threshold: float = 1.0 / 255.0,
    override: BoxSequence | None = None,
) -> BoxSequence:
    """
    Constraint boxes for generation.

    The conditioned frame's box is repeated for every frame. A user override
    is validated and returned unchanged. An empty conditioned alpha yields
    the full-frame box, i.e. unconstrained motion.

    Raises:
        BoxError: Override rows out of range
        BoxFileError: Override frame count differs from ``frames``
    """
    if override is not None:
        if len(override) != frames:
            raise BoxFileError("<override>", f"expected {frames} boxes, got {len(override)}")
        return validate_box_sequence(override)

    alpha = np.asarray(cond_alpha)
    alpha = alpha.reshape(alpha.shape[0], alpha.shape[1])
    box = extract_bbox(alpha, threshold)
    if box is None:
        logger.warning(
            "Conditioned alpha is empty; using the full-frame box", extra={"frames": frames}
        )
        return BoxSequence.repeat(FULL_FRAME, frames)
    height, width = alpha.shape
    row = normalize_boxes(np.asarray([box]), height, width).boxes[0]
    return BoxSequence.repeat(tuple(row), frames)
