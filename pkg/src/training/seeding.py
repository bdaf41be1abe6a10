"""Seeded random streams.

Every stage derives its generators from the run seed and its own stage
index, so stages never share a stream and each is reproducible alone.
"""

from dataclasses import dataclass

import numpy as np

STAGE_INDEX: dict[str, int] = {
    "vae": 0,
    "tvae": 1,
    "vdm": 2,
    "amcm": 3,
    "generate": 4,
    "evaluate": 5,
    "ablate": 6,
}


@dataclass
class StageStreams:
    """Independent generators: parameter init, batch sampling, noise."""

    init: np.random.Generator
    batches: np.random.Generator
    noise: np.random.Generator


def stage_streams(seed: int, stage: str) -> StageStreams:
    root = np.random.SeedSequence(seed, spawn_key=(STAGE_INDEX[stage],))
    init, batches, noise = (np.random.default_rng(s) for s in root.spawn(3))
    return StageStreams(init=init, batches=batches, noise=noise)
