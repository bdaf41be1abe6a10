"""Generation methods compared by the ablation report."""

from abc import ABC, abstractmethod

import numpy as np

from src.exceptions import ConfigError
from src.pipeline.schemas import GenerationRequest
from src.pipeline.service import TransparentVideoPipeline

from .baseline import chroma_key, composite_green
from .constants import METHOD_CHROMA_KEY, METHOD_WITH_AMCM, METHOD_WITHOUT_AMCM


class GenerationMethod(ABC):
    """Base class for a way of producing an RGBA video from a conditioned image."""

    name: str = "method"
    needs_adapter: bool = False

    @abstractmethod
    def generate(
        self,
        pipeline: TransparentVideoPipeline,
        cond_rgba: np.ndarray,
        prompt: str,
        seed: int,
    ) -> np.ndarray:
        """
        Produce RGBA frames.

        Args:
            pipeline: Loaded generation pipeline
            cond_rgba: Conditioned straight-alpha image [H, W, 4]
            prompt: Caption
            seed: Starting-noise seed, shared by all methods for a video

        Returns:
            Frames [N, H, W, 4]
        """
        pass


class AMCMGeneration(GenerationMethod):
    """Direct transparent generation with the trained motion constraint."""

    name = METHOD_WITH_AMCM
    needs_adapter = True

    def generate(
        self, pipeline: TransparentVideoPipeline, cond_rgba: np.ndarray, prompt: str, seed: int
    ) -> np.ndarray:
        request = GenerationRequest(prompt=prompt, seed=seed, use_amcm=True)
        return pipeline.generate(cond_rgba, request).frames


class BackboneGeneration(GenerationMethod):
    """Direct transparent generation with the frozen backbone alone."""

    name = METHOD_WITHOUT_AMCM

    def generate(
        self, pipeline: TransparentVideoPipeline, cond_rgba: np.ndarray, prompt: str, seed: int
    ) -> np.ndarray:
        request = GenerationRequest(prompt=prompt, seed=seed, use_amcm=False)
        return pipeline.generate(cond_rgba, request).frames


class ChromaKeyBaseline(GenerationMethod):
    """
    Post-processing baseline.

    The conditioned image is filled with green and made opaque, an RGB
    video is generated without the motion constraint, and every frame is
    keyed back to RGBA.
    """

    name = METHOD_CHROMA_KEY

    def __init__(self, tolerance: float = 0.35, feather: bool = False):
        self.tolerance = tolerance
        self.feather = feather

    def generate(
        self, pipeline: TransparentVideoPipeline, cond_rgba: np.ndarray, prompt: str, seed: int
    ) -> np.ndarray:
        filled = composite_green(cond_rgba)
        opaque = np.concatenate([filled, np.ones_like(cond_rgba[..., 3:4])], axis=-1)
        request = GenerationRequest(prompt=prompt, seed=seed, use_amcm=False)
        frames = pipeline.generate(opaque, request).frames
        return chroma_key(composite_green(frames), self.tolerance, self.feather)


def methods_for(names: list[str], tolerance: float) -> list[GenerationMethod]:
    """
    Instantiate methods by report name.

    Raises:
        ConfigError: Unknown method name
    """
    table: dict[str, GenerationMethod] = {
        METHOD_WITH_AMCM: AMCMGeneration(),
        METHOD_WITHOUT_AMCM: BackboneGeneration(),
        METHOD_CHROMA_KEY: ChromaKeyBaseline(tolerance),
    }
    unknown = [name for name in names if name not in table]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; choose from {sorted(table)}", key="methods")
    return [table[name] for name in names]
