"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest

from src.config import RunConfig, load_run_config
from src.dataio.schemas import RGBAVideo, SpriteParams
from src.dataio.sprites import gen_sprite_video

from tests.fixtures.sample_sprites import MICRO_OVERRIDES


@pytest.fixture
def rng():
    """Seeded generator shared by a test."""
    return np.random.default_rng(1234)


@pytest.fixture
def micro_config() -> RunConfig:
    """16x16, 4-frame configuration small enough for CPU tests."""
    return load_run_config(overrides=MICRO_OVERRIDES)


@pytest.fixture
def red_square_params() -> SpriteParams:
    """A hard-edged red square drifting right at 1 px per frame."""
    return SpriteParams(
        shape="square",
        color="red",
        motion="drift",
        size=6,
        frames=4,
        height=16,
        width=16,
        direction="right",
        speed=1,
        x0=2,
        y0=5,
    )


@pytest.fixture
def red_square_video(red_square_params) -> tuple[RGBAVideo, np.ndarray]:
    """Rendered red square video and its geometric boxes."""
    return gen_sprite_video(7, red_square_params)


@pytest.fixture
def micro_frames(micro_config) -> np.ndarray:
    """[M, N, H, W, 4] batch of three hard-edged sprite videos at micro scale."""
    videos = []
    for seed, params in enumerate(_micro_params(micro_config)):
        video, _ = gen_sprite_video(seed, params)
        videos.append(video.frames)
    return np.stack(videos)


def _micro_params(config: RunConfig) -> list[SpriteParams]:
    common = dict(frames=config.frames, height=config.resolution, width=config.resolution)
    return [
        SpriteParams(shape="square", color="red", motion="drift", size=5, x0=1, y0=4, **common),
        SpriteParams(shape="circle", color="blue", motion="static", size=6, x0=6, y0=6, **common),
        SpriteParams(shape="star", color="yellow", motion="blink", size=7, x0=3, y0=2, **common),
    ]
