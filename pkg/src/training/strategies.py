"""Per-stage training objectives.

The shared ``Trainer`` owns the optimiser, checkpoints and bookkeeping; a
``TrainingObjective`` says what is trained, how batches are drawn, and what
the loss is.
"""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np

from src.numcore.layers import Parameter
from src.numcore.tensor import Tensor


class TrainingObjective(ABC):
    """Base class for stage objectives."""

    stage: str = "stage"

    @abstractmethod
    def trainable(self) -> dict[str, Parameter]:
        """Parameters handed to the optimiser, by checkpoint name."""
        pass

    def frozen(self) -> dict[str, Parameter]:
        """Parameters that must never receive gradient."""
        return {}

    @abstractmethod
    def next_batch(self, rng: np.random.Generator) -> Any:
        """
        Draw the next batch.

        Called from the prefetch thread; must only touch ``rng`` and
        read-only data.
        """
        pass

    @abstractmethod
    def loss(self, batch: Any, rng: np.random.Generator) -> tuple[Tensor, dict[str, float]]:
        """
        Scalar loss for a batch plus auxiliary metrics for the history.

        Args:
            batch: Result of ``next_batch``
            rng: Noise stream (diffusion noise, reparameterisation)
        """
        pass

    def checkpoint_tensors(self) -> dict[str, np.ndarray]:
        """Parameter arrays written to the checkpoint."""
        return {name: p.data for name, p in self.trainable().items()}

    def metadata_extra(self) -> dict[str, Any]:
        """Stage-specific values stored in the checkpoint metadata."""
        return {}
