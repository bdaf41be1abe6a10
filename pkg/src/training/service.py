"""Shared optimisation loop for every training stage."""

import json
import logging
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from tqdm import tqdm

from src.config import CODE_VERSION, RunConfig, config_hash
from src.exceptions import NumericFailureError
from src.numcore.checkpoint import Checkpoint, save_checkpoint
from src.numcore.exceptions import NonFiniteError
from src.numcore.optim import AdamW
from src.numcore.schemas import CheckpointMetadata

from .exceptions import FrozenGradientError
from .schemas import LossRecord, TrainResult
from .seeding import StageStreams
from .strategies import TrainingObjective

logger = logging.getLogger(__name__)

SMOOTHING_WINDOW = 50


def smoothed_losses(losses: list[float], window: int = SMOOTHING_WINDOW) -> list[float]:
    """Trailing-window mean of a loss history."""
    out = []
    acc: deque[float] = deque(maxlen=window)
    for value in losses:
        acc.append(value)
        out.append(float(np.mean(acc)))
    return out


class Trainer:
    """
    Run an objective for ``config.steps`` AdamW steps.

    Batches are prepared one step ahead on a single worker thread. Every
    ``checkpoint_every`` steps the checkpoint path is atomically replaced,
    so a numeric failure leaves the last good checkpoint on disk.

    Example:
        trainer = Trainer(objective, config, streams, run_dir / "checkpoints/tvae.ckpt")
        result = trainer.run()
    """

    def __init__(
        self,
        objective: TrainingObjective,
        config: RunConfig,
        streams: StageStreams,
        checkpoint_path: Path,
        history_path: Path | None = None,
        upstream: dict[str, str] | None = None,
        debug: bool = False,
        show_progress: bool = True,
    ):
        self.objective = objective
        self.config = config
        self.streams = streams
        self.checkpoint_path = checkpoint_path
        self.history_path = history_path
        self.upstream = upstream or {}
        self.debug = debug or config.debug
        self.show_progress = show_progress
        self.optimizer = AdamW(
            objective.trainable(), lr=config.lr, weight_decay=config.weight_decay
        )

    def _metadata(self, step: int, complete: bool) -> CheckpointMetadata:
        extra: dict[str, Any] = dict(self.objective.metadata_extra())
        extra["complete"] = complete
        return CheckpointMetadata(
            stage=self.objective.stage,
            step=step,
            seed=self.config.seed,
            config_hash=config_hash(self.config),
            code_version=CODE_VERSION,
            config=self.config.to_record(),
            upstream=dict(self.upstream),
            extra=extra,
        )

    def save(self, step: int, complete: bool) -> str:
        tensors = dict(self.objective.checkpoint_tensors())
        tensors.update(self.optimizer.state_arrays())
        ckpt = Checkpoint(metadata=self._metadata(step, complete), tensors=tensors)
        return save_checkpoint(self.checkpoint_path, ckpt)

    def _audit_frozen(self, step: int) -> None:
        for name, param in self.objective.frozen().items():
            if param.grad is not None and np.any(param.grad != 0):
                raise FrozenGradientError(name, step)

    def run(self) -> TrainResult:
        """
        Train and write the final checkpoint.

        Raises:
            NumericFailureError: Loss or gradient became non-finite
            FrozenGradientError: Debug audit found gradient on a frozen parameter
        """
        cfg = self.config
        stage = self.objective.stage
        losses: list[float] = []
        window: deque[float] = deque(maxlen=SMOOTHING_WINDOW)
        log_every = max(1, cfg.steps // 20)
        history = None
        if self.history_path is not None:
            self.history_path.parent.mkdir(parents=True, exist_ok=True)
            history = self.history_path.open("w", encoding="utf-8")

        logger.info(
            "Training started",
            extra={
                "stage": stage,
                "steps": cfg.steps,
                "params": sum(p.size for p in self.objective.trainable().values()),
            },
        )
        digest = ""
        try:
            with ThreadPoolExecutor(max_workers=1) as prefetch:
                pending: Future[Any] = prefetch.submit(
                    self.objective.next_batch, self.streams.batches
                )
                bar = tqdm(range(1, cfg.steps + 1), desc=stage, disable=not self.show_progress)
                for step in bar:
                    batch = pending.result()
                    if step < cfg.steps:
                        pending = prefetch.submit(self.objective.next_batch, self.streams.batches)

                    loss, metrics = self.objective.loss(batch, self.streams.noise)
                    value = loss.item()
                    if not np.isfinite(value):
                        raise NumericFailureError(f"{stage} loss is {value}", step=step)
                    loss.backward()
                    if self.debug:
                        self._audit_frozen(step)
                    try:
                        self.optimizer.step()
                    except NonFiniteError as exc:
                        raise NumericFailureError(f"{stage}: {exc.message}", step=step) from exc
                    self.optimizer.zero_grad()

                    losses.append(value)
                    window.append(value)
                    smoothed = float(np.mean(window))
                    if history is not None:
                        record = LossRecord(step=step, loss=value, smoothed=smoothed, metrics=metrics)
                        history.write(record.model_dump_json() + "\n")
                    if step % log_every == 0 or step == cfg.steps:
                        bar.set_postfix(loss=f"{smoothed:.4g}")
                        logger.info(
                            "Training progress",
                            extra={"stage": stage, "step": step, "loss": value, "smoothed": smoothed},
                        )
                    if step % cfg.checkpoint_every == 0 and step < cfg.steps:
                        self.save(step, complete=False)
            digest = self.save(cfg.steps, complete=True)
        except NumericFailureError:
            logger.error(
                "Training aborted; last periodic checkpoint kept",
                extra={"stage": stage, "checkpoint": str(self.checkpoint_path)},
            )
            raise
        finally:
            if history is not None:
                history.close()

        final_smoothed = smoothed_losses(losses)[-1]
        logger.info(
            "Training finished",
            extra={"stage": stage, "loss": losses[-1], "smoothed": final_smoothed},
        )
        return TrainResult(
            stage=stage,
            steps=cfg.steps,
            final_loss=losses[-1],
            smoothed_loss=final_smoothed,
            checkpoint=str(self.checkpoint_path),
            digest=digest,
        )


def read_history(path: Path) -> list[LossRecord]:
    return [
        LossRecord.model_validate(json.loads(line))
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
