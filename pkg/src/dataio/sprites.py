"""Procedural transparent sprite videos.

A sprite is a hard-edged stamp (circle, square or star) drawn with Pillow,
optionally surrounded by a 1-px half-alpha ring, and pasted at integer
positions into an otherwise fully transparent frame. Trajectories are
chosen so the whole stamp stays inside the frame in every frame.
"""

import itertools
import math

import numpy as np
from PIL import Image, ImageDraw

from .constants import (
    CAPTION_TEMPLATE,
    COLORS,
    DIRECTIONS,
    MOTION_PHRASES,
    MOTIONS,
    SHAPES,
    SOFT_EDGE_ALPHA,
)
from .exceptions import SpriteConfigError
from .schemas import RGBAVideo, SpriteParams


def caption_for(params: SpriteParams) -> str:
    """Template caption, e.g. ``a red circle drifting right``."""
    phrase = MOTION_PHRASES[params.motion]
    if params.motion == "drift":
        phrase = f"{phrase} {params.direction}"
    return CAPTION_TEMPLATE.format(color=params.color, shape=params.shape, motion=phrase)


def all_captions() -> list[str]:
    """Every caption the generator can produce."""
    captions = []
    for color, shape, motion in itertools.product(sorted(COLORS), SHAPES, MOTIONS):
        directions = list(DIRECTIONS) if motion == "drift" else ["right"]
        for direction in directions:
            params = SpriteParams(
                shape=shape, color=color, motion=motion, size=2, frames=1,
                height=4, width=4, direction=direction,
            )
            captions.append(caption_for(params))
    return sorted(set(captions))


def caption_vocabulary() -> list[str]:
    """Sorted closed token vocabulary of the caption templates."""
    return sorted({token for caption in all_captions() for token in caption.split()})


def _shape_image(shape: str, size: int, canvas: int) -> Image.Image:
    img = Image.new("L", (canvas, canvas), 0)
    draw = ImageDraw.Draw(img)
    lo = (canvas - size) // 2
    hi = lo + size - 1
    if shape == "circle":
        draw.ellipse((lo, lo, hi, hi), fill=255)
    elif shape == "square":
        draw.rectangle((lo, lo, hi, hi), fill=255)
    else:
        centre = (lo + hi) / 2.0
        outer = (size - 1) / 2.0
        inner = outer * 0.45
        points = []
        for k in range(10):
            radius = outer if k % 2 == 0 else inner
            angle = -math.pi / 2 + k * math.pi / 5
            points.append((centre + radius * math.cos(angle), centre + radius * math.sin(angle)))
        draw.polygon(points, fill=255)
    return img


def _ring(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 1)
    grown = (
        padded[1:-1, 1:-1]
        | padded[:-2, 1:-1]
        | padded[2:, 1:-1]
        | padded[1:-1, :-2]
        | padded[1:-1, 2:]
    )
    return grown & ~mask


def footprint_side(params: SpriteParams) -> int:
    """Side of the square stamp canvas, soft ring included."""
    side = math.ceil(params.size * math.sqrt(2.0)) if params.motion == "rotate" else params.size
    return side + (2 if params.soft_edge else 0)


def _stamp_alpha(params: SpriteParams, angle: float) -> np.ndarray:
    side = footprint_side(params)
    inner = side - 2 if params.soft_edge else side
    img = _shape_image(params.shape, params.size, inner)
    if angle:
        img = img.rotate(angle, resample=Image.Resampling.NEAREST)
    mask = np.asarray(img) > 127
    if params.soft_edge:
        mask = np.pad(mask, 1)
        return mask.astype(np.float32) + SOFT_EDGE_ALPHA * _ring(mask).astype(np.float32)
    return mask.astype(np.float32)


def _pick(rng: np.random.Generator, lo: int, hi: int, given: int | None, axis: str) -> int:
    if hi < lo:
        raise SpriteConfigError(f"sprite trajectory does not fit along {axis}", key="size")
    if given is None:
        return int(rng.integers(lo, hi + 1))
    if not lo <= given <= hi:
        raise SpriteConfigError(f"start {given} outside [{lo}, {hi}] along {axis}", key=axis)
    return given


def trajectory(params: SpriteParams, rng: np.random.Generator) -> np.ndarray:
    """
    Top-left stamp positions for every frame.

    Returns:
        Int array [N, 2] of (x, y)

    Raises:
        SpriteConfigError: Sprite or its motion does not fit in the frame
    """
    side = footprint_side(params)
    if side > min(params.height, params.width):
        raise SpriteConfigError(
            f"sprite footprint {side}px exceeds the {params.width}x{params.height} frame",
            key="size",
        )
    n = params.frames
    free_x = params.width - side
    free_y = params.height - side
    steps = np.arange(n)

    if params.motion == "drift":
        dx, dy = DIRECTIONS[params.direction]
        travel = params.speed * (n - 1)
        x_lo, x_hi = (travel, free_x) if dx < 0 else (0, free_x - travel * dx)
        y_lo, y_hi = (travel, free_y) if dy < 0 else (0, free_y - travel * dy)
        x0 = _pick(rng, x_lo, x_hi, params.x0, "x0")
        y0 = _pick(rng, y_lo, y_hi, params.y0, "y0")
        xs = x0 + dx * params.speed * steps
        ys = y0 + dy * params.speed * steps
    elif params.motion == "oscillate":
        amplitude = min(side // 2, free_x // 2)
        x0 = _pick(rng, amplitude, free_x - amplitude, params.x0, "x0")
        y0 = _pick(rng, 0, free_y, params.y0, "y0")
        xs = x0 + np.rint(amplitude * np.sin(2.0 * np.pi * steps / n)).astype(int)
        ys = np.full(n, y0)
    else:
        x0 = _pick(rng, 0, free_x, params.x0, "x0")
        y0 = _pick(rng, 0, free_y, params.y0, "y0")
        xs = np.full(n, x0)
        ys = np.full(n, y0)
    return np.stack([xs, ys], axis=1).astype(np.int64)


def gen_sprite_video(seed: int, params: SpriteParams) -> tuple[RGBAVideo, np.ndarray]:
    """
    Render a sprite video.

    Args:
        seed: Seed for the start position (used only when x0/y0 are unset)
        params: Sprite, motion and frame geometry

    Returns:
        Tuple of (video, inclusive pixel boxes [N, 4] from the stamp geometry)

    Raises:
        SpriteConfigError: Sprite larger than the frame, or motion leaves the frame
    """
    rng = np.random.default_rng(seed)
    positions = trajectory(params, rng)
    n, h, w = params.frames, params.height, params.width
    color = np.asarray(COLORS[params.color], dtype=np.float32)

    frames = np.zeros((n, h, w, 4), dtype=np.float32)
    boxes = np.zeros((n, 4), dtype=np.int64)
    static_stamp = None if params.motion == "rotate" else _stamp_alpha(params, 0.0)
    for i, (x, y) in enumerate(positions):
        angle = 360.0 * i / n if params.motion == "rotate" else 0.0
        stamp = static_stamp if static_stamp is not None else _stamp_alpha(params, angle)
        side = stamp.shape[0]
        gain = 0.55 + 0.45 * math.cos(2.0 * math.pi * i / n) if params.motion == "blink" else 1.0
        region = frames[i, y : y + side, x : x + side]
        inside = stamp > 0
        region[..., 3] = stamp
        region[inside, :3] = color * gain

        rows = np.flatnonzero(inside.any(axis=1))
        cols = np.flatnonzero(inside.any(axis=0))
        boxes[i] = (x + cols[0], y + rows[0], x + cols[-1], y + rows[-1])

    video = RGBAVideo(frames=frames, caption=caption_for(params), fps=params.fps)
    return video, boxes


def sample_sprite_params(
    rng: np.random.Generator,
    height: int,
    width: int,
    frames: int,
    soft_edge: bool = False,
) -> SpriteParams:
    """Draw random sprite parameters that are guaranteed to fit the frame."""
    shape = SHAPES[int(rng.integers(len(SHAPES)))]
    color = sorted(COLORS)[int(rng.integers(len(COLORS)))]
    motion = MOTIONS[int(rng.integers(len(MOTIONS)))]
    direction = list(DIRECTIONS)[int(rng.integers(len(DIRECTIONS)))]
    ring = 2 if soft_edge else 0
    side_limit = min(height, width) - ring

    lo = max(3, min(height, width) // 4)
    hi = max(lo, min(height, width) // 2)
    size = int(rng.integers(lo, hi + 1))
    if motion == "drift":
        size = min(size, side_limit - (frames - 1))
    elif motion == "rotate":
        size = min(size, int(side_limit / math.sqrt(2.0)))
    else:
        size = min(size, side_limit)
    if size < 2:
        motion, size = "static", max(2, min(lo, side_limit))

    return SpriteParams(
        shape=shape,
        color=color,
        motion=motion,
        size=size,
        frames=frames,
        height=height,
        width=width,
        direction=direction,
        speed=1,
        soft_edge=soft_edge,
    )
