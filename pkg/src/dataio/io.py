"""RGBA frame sequences and JSON-lines manifests on disk."""

import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .constants import FRAME_GLOB, FRAME_PATTERN, META_FILENAME
from .exceptions import ManifestError, SequenceLoadError
from .schemas import ManifestEntry, RGBAVideo, SpriteParams, VideoMeta

_FRAME_INDEX = re.compile(r"frame_(\d+)\.png$")


def to_uint8(values: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_rgba_sequence(
    video: RGBAVideo,
    directory: Path,
    params: SpriteParams | None = None,
) -> list[Path]:
    """
    Write ``frame_0000.png`` ... as 8-bit straight-alpha RGBA plus ``meta.json``.

    Returns:
        Frame paths in order
    """
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(video.frames):
        path = directory / FRAME_PATTERN.format(index=i)
        Image.fromarray(to_uint8(frame)).save(path)
        paths.append(path)
    meta = VideoMeta(
        frames=video.num_frames,
        height=video.height,
        width=video.width,
        fps=video.fps,
        caption=video.caption,
        params=params,
    )
    (directory / META_FILENAME).write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    return paths


def save_rgb_sequence(frames: np.ndarray, directory: Path, prefix: str = "preview") -> list[Path]:
    """Write [N, H, W, 3] frames as RGB PNGs named ``<prefix>_0000.png``."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = directory / f"{prefix}_{i:04d}.png"
        Image.fromarray(to_uint8(frame)).save(path)
        paths.append(path)
    return paths


def read_rgba_image(path: Path) -> np.ndarray:
    """Read any raster image as float32 [H, W, 4] in [0, 1]; opaque if it has no alpha."""
    with Image.open(path) as img:
        rgba = np.asarray(img.convert("RGBA"), dtype=np.float32)
    return rgba / 255.0


def load_rgba_sequence(directory: Path) -> RGBAVideo:
    """
    Load a sequence written by ``save_rgba_sequence``.

    Raises:
        SequenceLoadError: No frames, a gap in the numbering, or mixed frame sizes
    """
    if not directory.is_dir():
        raise SequenceLoadError(str(directory), "directory not found")
    indexed: dict[int, Path] = {}
    for path in sorted(directory.glob(FRAME_GLOB)):
        match = _FRAME_INDEX.search(path.name)
        if match:
            indexed[int(match.group(1))] = path
    if not indexed:
        raise SequenceLoadError(str(directory), "no frame files")
    for expected in range(max(indexed) + 1):
        if expected not in indexed:
            raise SequenceLoadError(str(directory), f"missing frame index {expected}")

    frames = []
    for index in sorted(indexed):
        frame = read_rgba_image(indexed[index])
        if frames and frame.shape != frames[0].shape:
            raise SequenceLoadError(
                str(directory),
                f"frame {index} is {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {frames[0].shape[1]}x{frames[0].shape[0]}",
            )
        frames.append(frame)

    caption, fps = "", None
    meta_path = directory / META_FILENAME
    if meta_path.exists():
        meta = VideoMeta.model_validate_json(meta_path.read_text(encoding="utf-8"))
        caption, fps = meta.caption, meta.fps
    video = RGBAVideo(frames=np.stack(frames), caption=caption)
    if fps is not None:
        video.fps = fps
    return video


def write_manifest(path: Path, entries: list[ManifestEntry]) -> None:
    """Write one JSON record per line, in the given order."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [entry.model_dump_json() for entry in entries]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_manifest(path: Path, check_paths: bool = True) -> list[ManifestEntry]:
    """
    Read a manifest and check its invariants.

    Raises:
        ManifestError: Malformed line, duplicate id, or missing frame directory
    """
    if not path.exists():
        raise ManifestError(str(path), "file not found")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = ManifestEntry.model_validate(json.loads(line))
        except ValueError as exc:
            raise ManifestError(str(path), f"line {lineno}: {exc}") from exc
        if entry.id in seen:
            raise ManifestError(str(path), f"duplicate id '{entry.id}'")
        seen.add(entry.id)
        if check_paths and not (path.parent / entry.path).is_dir():
            raise ManifestError(str(path), f"'{entry.id}' points at missing {entry.path}")
        entries.append(entry)
    return entries
