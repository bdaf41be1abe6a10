"""Unit tests for the shared training loop, seeding and loss history."""

import numpy as np
import pytest

from src.config import load_run_config
from src.exceptions import NumericFailureError
from src.numcore.checkpoint import load_checkpoint
from src.numcore.layers import Parameter
from src.numcore.tensor import Tensor
from src.training.exceptions import FrozenGradientError
from src.training.seeding import stage_streams
from src.training.service import Trainer, read_history, smoothed_losses
from src.training.strategies import TrainingObjective

from tests.fixtures.sample_sprites import MICRO_OVERRIDES


class QuadraticObjective(TrainingObjective):
    """Pull a vector towards noisy targets; optionally blow up at one step."""

    stage = "vae"

    def __init__(self, rng: np.random.Generator, nan_at: int | None = None, leak_frozen: bool = False):
        self.weight = Parameter(3.0 + rng.standard_normal(3))
        self.anchor = Parameter(np.ones(3))
        if not leak_frozen:
            self.anchor.requires_grad = False
        self.nan_at = nan_at
        self.calls = 0

    def trainable(self):
        return {"vae.weight": self.weight}

    def frozen(self):
        return {"vae.anchor": self.anchor}

    def next_batch(self, rng):
        return rng.standard_normal(3)

    def loss(self, batch, rng):
        self.calls += 1
        target = Tensor.constant(np.asarray(batch, dtype=np.float32))
        loss = ((self.weight - target) ** 2).sum() + (self.anchor * 0.5).sum()
        if self.nan_at is not None and self.calls == self.nan_at:
            loss = loss * float("nan")
        return loss, {"target_norm": float(np.linalg.norm(batch))}


@pytest.fixture
def config():
    """Three steps with a periodic save at step 2."""
    return load_run_config(overrides=MICRO_OVERRIDES)


def make_trainer(config, tmp_path, seed=0, **objective_kwargs):
    streams = stage_streams(config.seed, "vae")
    objective = QuadraticObjective(np.random.default_rng(seed), **objective_kwargs)
    return Trainer(
        objective,
        config,
        streams,
        tmp_path / "checkpoints" / "vae.ckpt",
        history_path=tmp_path / "metrics" / "vae_loss.jsonl",
        show_progress=False,
    )


class TestTrainer:
    """Unit tests for Trainer."""

    def test_writes_complete_checkpoint(self, config, tmp_path):
        """A finished run should leave a complete checkpoint with optimiser state."""
        result = make_trainer(config, tmp_path).run()
        ckpt = load_checkpoint(tmp_path / "checkpoints" / "vae.ckpt")
        assert result.steps == config.steps
        assert ckpt.metadata.step == config.steps
        assert ckpt.metadata.extra["complete"] is True
        assert "vae.weight" in ckpt.tensors
        assert any(name.startswith("optimizer.m.") for name in ckpt.tensors)
        assert "vae.anchor" not in ckpt.tensors

    def test_history_lines(self, config, tmp_path):
        """One history record per step, with auxiliary metrics."""
        make_trainer(config, tmp_path).run()
        records = read_history(tmp_path / "metrics" / "vae_loss.jsonl")
        assert [r.step for r in records] == list(range(1, config.steps + 1))
        assert "target_norm" in records[0].metrics

    def test_deterministic(self, config, tmp_path):
        """Same seed, same checkpoint bytes."""
        a = make_trainer(config, tmp_path / "a").run()
        b = make_trainer(config, tmp_path / "b").run()
        assert a.digest == b.digest
        assert a.final_loss == b.final_loss

    def test_loss_decreases_on_average(self, tmp_path):
        """A long run on the quadratic should reduce the smoothed loss."""
        config = load_run_config(overrides={**MICRO_OVERRIDES, "steps": 200, "lr": 0.05})
        make_trainer(config, tmp_path).run()
        records = read_history(tmp_path / "metrics" / "vae_loss.jsonl")
        assert records[-1].smoothed < records[49].smoothed

    def test_nan_keeps_periodic_checkpoint(self, config, tmp_path):
        """A non-finite loss aborts with the last periodic save left incomplete on disk."""
        trainer = make_trainer(config, tmp_path, nan_at=3)
        with pytest.raises(NumericFailureError) as excinfo:
            trainer.run()
        assert excinfo.value.step == 3
        assert excinfo.value.exit_code == 4
        ckpt = load_checkpoint(tmp_path / "checkpoints" / "vae.ckpt")
        assert ckpt.metadata.step == 2
        assert ckpt.metadata.extra["complete"] is False

    def test_debug_audit_catches_frozen_gradient(self, config, tmp_path):
        """In debug mode gradient on a frozen parameter should stop training."""
        streams = stage_streams(config.seed, "vae")
        objective = QuadraticObjective(np.random.default_rng(0), leak_frozen=True)
        trainer = Trainer(objective, config, streams, tmp_path / "vae.ckpt", debug=True, show_progress=False)
        with pytest.raises(FrozenGradientError) as excinfo:
            trainer.run()
        assert excinfo.value.parameter == "vae.anchor"
        assert excinfo.value.step == 1

    def test_audit_off_by_default(self, config, tmp_path):
        """Without debug the audit does not run."""
        make_trainer(config, tmp_path, leak_frozen=True).run()


class TestSeeding:
    """Unit tests for per-stage random streams."""

    def test_reproducible(self):
        a = stage_streams(5, "vdm").noise.standard_normal(4)
        b = stage_streams(5, "vdm").noise.standard_normal(4)
        np.testing.assert_array_equal(a, b)

    def test_stages_independent(self):
        """Different stages of the same run draw different numbers."""
        a = stage_streams(5, "vdm").noise.standard_normal(4)
        b = stage_streams(5, "amcm").noise.standard_normal(4)
        assert not np.array_equal(a, b)

    def test_streams_independent(self):
        streams = stage_streams(0, "tvae")
        assert streams.init.random() != streams.batches.random()


class TestSmoothing:
    """Unit tests for the trailing-window mean."""

    def test_window(self):
        assert smoothed_losses([1.0, 3.0, 5.0], window=2) == [1.0, 2.0, 4.0]
