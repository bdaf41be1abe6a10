"""Dataset generation, curation and loading."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from tqdm import tqdm

from src.amcm.boxes import (
    BoxSequence,
    extract_box_sequence,
    normalize_boxes,
    read_box_file,
    write_box_file,
)
from src.config import RunConfig

from .constants import BOXES_FILENAME, FILTER_REPORT_FILENAME, MANIFEST_FILENAME, SPLITS
from .exceptions import ManifestError
from .io import load_rgba_sequence, read_manifest, save_rgba_sequence, write_manifest
from .schemas import FilterReport, ManifestEntry, RGBAVideo
from .sprites import gen_sprite_video, sample_sprite_params
from .strategies import FilterRule, default_rules

logger = logging.getLogger(__name__)

UNREADABLE = "unreadable"


def video_seeds(root_seed: int, count: int) -> list[int]:
    """Independent per-video seeds derived from the run seed."""
    state = np.random.SeedSequence(root_seed).generate_state(count, dtype=np.uint32)
    return [int(s) for s in state]


def filter_dataset(
    entries: list[ManifestEntry],
    root: Path,
    rules: list[FilterRule],
    threads: int = 1,
) -> tuple[list[ManifestEntry], FilterReport]:
    """
    Apply curation rules to manifest entries.

    Entries whose frames cannot be loaded are dropped, logged, and counted
    under ``unreadable``; they never abort the pass.

    Args:
        entries: Manifest records
        root: Directory the entry paths are relative to
        rules: Rules in priority order
        threads: Worker threads for frame loading

    Returns:
        Tuple of (retained entries in input order, report)
    """

    def verdict(entry: ManifestEntry) -> str | None:
        try:
            video = load_rgba_sequence(root / entry.path)
        except Exception as exc:
            logger.warning(
                "Dropping unreadable dataset entry",
                extra={"entry": entry.id, "error": str(exc)},
            )
            return UNREADABLE
        for rule in rules:
            if rule.rejects(entry, video):
                return rule.name
        return None

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        verdicts = list(pool.map(verdict, entries))

    report = FilterReport(total=len(entries))
    report.removed = {rule.name: 0 for rule in rules}
    report.removed_ids = {rule.name: [] for rule in rules}
    kept = []
    for entry, reason in zip(entries, verdicts):
        if reason is None:
            kept.append(entry)
            continue
        report.removed[reason] = report.removed.get(reason, 0) + 1
        report.removed_ids.setdefault(reason, []).append(entry.id)
    report.kept = len(kept)
    return kept, report


class DatasetBuilder:
    """
    Generate, curate and index the procedural sprite dataset.

    Layout under ``out_dir``::

        manifest.jsonl
        filter_report.json
        train/<id>/frame_0000.png ... meta.json boxes.txt
        eval/<id>/...

    Example:
        builder = DatasetBuilder(config, threads=4)
        entries = builder.build(run_dir / "data")
    """

    def __init__(self, config: RunConfig, threads: int = 1):
        self.config = config
        self.threads = max(1, threads)

    def _render_one(self, out_dir: Path, split: str, index: int, seed: int) -> ManifestEntry:
        cfg = self.config
        rng = np.random.default_rng(seed)
        soft = bool(rng.random() < cfg.soft_edge_fraction)
        params = sample_sprite_params(rng, cfg.resolution, cfg.resolution, cfg.frames, soft)
        video, pixel_boxes = gen_sprite_video(int(rng.integers(2**31)), params)

        video_id = f"{split}-{index:05d}"
        rel = Path(split) / video_id
        save_rgba_sequence(video, out_dir / rel, params=params)
        boxes = normalize_boxes(pixel_boxes, video.height, video.width)
        write_box_file(out_dir / rel / BOXES_FILENAME, boxes)
        return ManifestEntry(
            id=video_id,
            path=rel.as_posix(),
            frames=video.num_frames,
            height=video.height,
            width=video.width,
            caption=video.caption,
            boxes=(rel / BOXES_FILENAME).as_posix(),
            split=split,  # type: ignore[arg-type]
        )

    def build(self, out_dir: Path) -> list[ManifestEntry]:
        """
        Render both splits, curate them and write the manifest.

        Returns:
            Retained manifest entries
        """
        cfg = self.config
        counts = {"train": cfg.train_videos, "eval": cfg.eval_videos}
        seeds = video_seeds(cfg.seed, sum(counts.values()))
        jobs = []
        offset = 0
        for split in SPLITS:
            for i in range(counts[split]):
                jobs.append((split, i, seeds[offset + i]))
            offset += counts[split]

        logger.info("Generating sprite videos", extra={"videos": len(jobs), "threads": self.threads})
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(self._render_one, out_dir, *job) for job in jobs]
            entries = [f.result() for f in tqdm(futures, desc="gen-data", unit="video")]

        kept, report = filter_dataset(
            entries, out_dir, default_rules(cfg.min_resolution), threads=self.threads
        )
        write_manifest(out_dir / MANIFEST_FILENAME, kept)
        (out_dir / FILTER_REPORT_FILENAME).write_text(
            report.model_dump_json(indent=2), encoding="utf-8"
        )
        logger.info(
            "Dataset written",
            extra={"kept": report.kept, "total": report.total, "removed": json.dumps(report.removed)},
        )
        return kept


@dataclass
class VideoDataset:
    """
    In-memory split used by the training loops.

    ``frames`` is [M, N, H, W, 4]; ``boxes`` holds normalised boxes [M, N, 4].
    """

    ids: list[str]
    frames: np.ndarray
    captions: list[str]
    boxes: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    def box_sequence(self, index: int) -> BoxSequence:
        return BoxSequence(boxes=self.boxes[index], valid=np.ones(self.boxes.shape[1], dtype=bool))


def _entry_boxes(root: Path, entry: ManifestEntry, video: RGBAVideo, threshold: float) -> np.ndarray:
    if entry.boxes is not None and (root / entry.boxes).exists():
        return read_box_file(root / entry.boxes, frames=video.num_frames).boxes
    pixel, valid = extract_box_sequence(video.alpha, threshold)
    return normalize_boxes(pixel, video.height, video.width, valid).boxes


def load_split(
    data_dir: Path,
    split: str,
    limit: int | None = None,
    threshold: float = 1.0 / 255.0,
    threads: int = 1,
) -> VideoDataset:
    """
    Load one split of a generated dataset into memory.

    Raises:
        ManifestError: Missing manifest or an empty split
    """
    manifest = data_dir / MANIFEST_FILENAME
    entries = [e for e in read_manifest(manifest) if e.split == split]
    if limit is not None:
        entries = entries[:limit]
    if not entries:
        raise ManifestError(str(manifest), f"split '{split}' is empty")

    def load(entry: ManifestEntry) -> tuple[RGBAVideo, np.ndarray]:
        video = load_rgba_sequence(data_dir / entry.path)
        return video, _entry_boxes(data_dir, entry, video, threshold)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        loaded = list(pool.map(load, entries))
    return VideoDataset(
        ids=[e.id for e in entries],
        frames=np.stack([v.frames for v, _ in loaded]).astype(np.float32),
        captions=[e.caption for e in entries],
        boxes=np.stack([b for _, b in loaded]),
    )
