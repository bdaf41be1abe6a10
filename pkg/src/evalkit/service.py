"""Evaluation: stage-1 autoencoder quality and the with/without-AMCM ablation report."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from tqdm import tqdm

from src.amcm.boxes import BoxSequence
from src.autoenc.service import TransparentAutoencoder, to_nhwc
from src.autoenc.smoothing import smooth_rgb
from src.config import RunConfig, config_hash
from src.dataio.compositing import composite_over
from src.dataio.service import VideoDataset
from src.pipeline.service import TransparentVideoPipeline
from src.training.seeding import stage_streams

from .constants import BLACK, GAP_MARKER, REPORT_JSONL, REPORT_TABLE
from .metrics import alpha_iou, artifact_escape_ratio, edge_fringe_score, psnr, temporal_flicker
from .schemas import MethodRow, MetricsReport, Stage1Report, VideoScores
from .strategies import GenerationMethod

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("alpha_iou", "psnr", "aer", "edge_fringe", "flicker")


def over_black(frames: np.ndarray) -> np.ndarray:
    return composite_over(frames, BLACK)


def score_video(
    video_id: str,
    pred: np.ndarray,
    gt: np.ndarray,
    boxes: BoxSequence,
    dilation: int,
) -> VideoScores:
    """All per-video metrics of predicted RGBA frames [N, H, W, 4] against ground truth."""
    return VideoScores(
        video_id=video_id,
        alpha_iou=alpha_iou(pred[..., 3], gt[..., 3]),
        psnr=psnr(over_black(pred), over_black(gt)),
        aer=artifact_escape_ratio(pred[..., 3], boxes, dilation),
        edge_fringe=edge_fringe_score(pred[..., 3], gt[..., 3]),
        flicker=temporal_flicker(pred[..., 3]),
    )


def summarise(method: str, scores: list[VideoScores]) -> MethodRow:
    """Mean of every metric column over the videos of one method."""
    means = {col: float(np.mean([getattr(s, col) for s in scores])) for col in METRIC_COLUMNS}
    return MethodRow(method=method, videos=len(scores), **means)


def eval_seeds(seed: int, count: int) -> list[int]:
    """Starting-noise seeds, one per eval video, shared by every method."""
    rng = stage_streams(seed, "ablate").noise
    return [int(s) for s in rng.integers(0, 2**31 - 1, size=count)]


class AblationRunner:
    """
    Generate the eval split with each method and compare against ground truth.

    Every method sees the same conditioned frames, prompts and noise seeds.
    A method that cannot run (no pipeline, or no adapter for the AMCM row)
    yields a row flagged ``missing`` instead of aborting the report.

    Example:
        runner = AblationRunner(pipeline, config, threads=4)
        report = runner.run(eval_set, methods_for(["with-amcm", "without-amcm"], 0.35), "eval")
    """

    def __init__(
        self,
        pipeline: TransparentVideoPipeline | None,
        config: RunConfig,
        threads: int = 1,
        show_progress: bool = True,
    ):
        self.pipeline = pipeline
        self.config = config
        self.threads = max(1, threads)
        self.show_progress = show_progress

    def _unavailable(self, method: GenerationMethod) -> str | None:
        if self.pipeline is None:
            return "no diffusion backbone checkpoint"
        if method.needs_adapter and self.pipeline.adapter is None:
            return "no AMCM checkpoint"
        return None

    def _score_method(
        self, method: GenerationMethod, dataset: VideoDataset, seeds: list[int]
    ) -> MethodRow:
        pipeline = self.pipeline
        assert pipeline is not None

        def one(index: int) -> VideoScores:
            gt = dataset.frames[index]
            cond = gt[0]
            frames = method.generate(pipeline, cond, dataset.captions[index], seeds[index])
            boxes, _ = pipeline.resolve_boxes(cond)
            return score_video(dataset.ids[index], frames, gt, boxes, self.config.aer_dilation)

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            scores = list(
                tqdm(
                    pool.map(one, range(len(dataset))),
                    total=len(dataset),
                    desc=method.name,
                    disable=not self.show_progress,
                )
            )
        return summarise(method.name, scores)

    def run(
        self, dataset: VideoDataset, methods: list[GenerationMethod], dataset_name: str
    ) -> MetricsReport:
        seeds = eval_seeds(self.config.seed, len(dataset))
        rows = []
        for method in methods:
            reason = self._unavailable(method)
            if reason is not None:
                logger.warning("Method skipped", extra={"method": method.name, "reason": reason})
                rows.append(MethodRow(method=method.name, missing=True, reason=reason))
                continue
            row = self._score_method(method, dataset, seeds)
            logger.info("Method scored", extra=row.model_dump(exclude_none=True))
            rows.append(row)
        return MetricsReport(
            dataset=dataset_name,
            seeds=seeds,
            config_hash=config_hash(self.config),
            requested=[m.name for m in methods],
            rows=rows,
        )


def _cell(value: float | None, digits: int) -> str:
    return GAP_MARKER if value is None else f"{value:.{digits}f}"


def format_table(report: MetricsReport) -> str:
    """Aligned plain-text table; absent methods show the gap marker in every column."""
    header = ["method", "videos", "alpha_iou", "psnr_db", "aer", "edge_fringe", "flicker"]
    lines = [header]
    for row in report.rows:
        lines.append(
            [
                row.method,
                GAP_MARKER if row.missing else str(row.videos),
                _cell(row.alpha_iou, 4),
                _cell(row.psnr, 2),
                _cell(row.aer, 4),
                _cell(row.edge_fringe, 4),
                _cell(row.flicker, 4),
            ]
        )
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    rendered = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in lines]
    footer = [
        "",
        f"dataset={report.dataset} config_hash={report.config_hash} videos={len(report.seeds)}",
        report.note,
    ]
    return "\n".join(rendered + footer) + "\n"


def write_report(report: MetricsReport, out_dir: Path) -> tuple[Path, Path]:
    """
    Write ``ablation.jsonl`` (one record per method) and ``ablation.txt``.

    Returns:
        (jsonl path, table path)
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    jsonl = out_dir / REPORT_JSONL
    meta = {"dataset": report.dataset, "config_hash": report.config_hash, "seeds": report.seeds}
    with jsonl.open("w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(json.dumps({**meta, **row.model_dump()}, sort_keys=True) + "\n")
    table = out_dir / REPORT_TABLE
    table.write_text(format_table(report), encoding="utf-8")
    return jsonl, table


def evaluate_stage1(
    autoencoder: TransparentAutoencoder, dataset: VideoDataset, config: RunConfig
) -> Stage1Report:
    """
    Held-out alpha IoU and RGB PSNR of the transparent autoencoder.

    RGB targets are the smoothed frames the VAE was trained on; PSNR is
    reported both through the adjusted latent and through the VAE alone.
    """
    frames = dataset.frames.reshape(-1, *dataset.frames.shape[2:])
    target_rgb = smooth_rgb(frames[..., :3], frames[..., 3])
    latents = autoencoder.encode(frames)
    decoded = autoencoder.decode(latents.z_adj)
    rgb_adjusted = to_nhwc(autoencoder.decode_rgb(latents.z_adj))
    rgb_vae = to_nhwc(autoencoder.decode_rgb(latents.z))

    z_norm = np.linalg.norm(latents.z.reshape(len(frames), -1), axis=1)
    za_norm = np.linalg.norm(latents.z_alpha.reshape(len(frames), -1), axis=1)
    ratio = float(np.mean(za_norm / np.maximum(z_norm, 1e-12)))

    return Stage1Report(
        videos=len(dataset),
        frames=len(frames),
        alpha_iou=alpha_iou(decoded[..., 3], frames[..., 3]),
        psnr_adjusted=psnr(np.clip(rgb_adjusted, 0.0, 1.0), target_rgb),
        psnr_vae=psnr(np.clip(rgb_vae, 0.0, 1.0), target_rgb),
        perturbation_ratio=ratio,
        config_hash=config_hash(config),
    )
