"""Transparent video generation from trained checkpoints."""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from src.amcm.boxes import BoxSequence, extract_bbox, inference_boxes, write_box_file
from src.amcm.module import AMCMAdapter
from src.autoenc.service import TransparentAutoencoder
from src.config import RunConfig, config_hash
from src.dataio.compositing import composite_over
from src.dataio.constants import BOXES_FILENAME
from src.dataio.io import save_rgb_sequence, save_rgba_sequence
from src.dataio.schemas import RGBAVideo
from src.numcore.tensor import no_grad
from src.vdm.service import DiffusionBackbone
from src.vdm.strategies import DDIMSampler, Sampler

from .exceptions import ConditionImageError
from .schemas import BoxSource, GeneratedVideo, GenerationMeta, GenerationRequest

logger = logging.getLogger(__name__)

BLACK = (0.0, 0.0, 0.0)
GENERATION_META_FILENAME = "generation.json"


class TransparentVideoPipeline:
    """
    Conditioned RGBA image + prompt -> RGBA video.

    The conditioned frame is encoded to its adjusted latent, the frozen
    backbone denoises a latent video with DDIM, optionally constrained by
    AMCM boxes, and the TVAE decoder returns RGB and alpha per frame.
    Generation only reads model state, so several videos can be produced
    concurrently.

    Example:
        pipeline = TransparentVideoPipeline(autoencoder, backbone, adapter, config)
        video = pipeline.generate(cond_rgba, GenerationRequest(prompt="a red circle", seed=7))
        video.frames.shape  # (N, H, W, 4)
    """

    def __init__(
        self,
        autoencoder: TransparentAutoencoder,
        backbone: DiffusionBackbone,
        adapter: AMCMAdapter | None,
        config: RunConfig,
        sampler: Sampler | None = None,
    ):
        self.autoencoder = autoencoder
        self.backbone = backbone
        self.adapter = adapter
        self.config = config
        self.sampler = sampler or DDIMSampler(backbone.schedule, config.sampler_steps, config.eta)

    def _check_condition(self, cond_rgba: np.ndarray) -> None:
        expected = (self.config.resolution, self.config.resolution, 4)
        if cond_rgba.shape != expected:
            raise ConditionImageError(expected, cond_rgba.shape)

    def resolve_boxes(
        self, cond_rgba: np.ndarray, override: BoxSequence | None = None
    ) -> tuple[BoxSequence, BoxSource]:
        """Constraint boxes for a conditioned image and where they came from."""
        frames = self.config.frames
        boxes = inference_boxes(cond_rgba[..., 3], frames, self.config.alpha_threshold, override)
        if override is not None:
            return boxes, "override"
        if extract_bbox(cond_rgba[..., 3], self.config.alpha_threshold) is None:
            return boxes, "full-frame"
        return boxes, "conditioned-image"

    def generate(
        self,
        cond_rgba: np.ndarray,
        request: GenerationRequest,
        boxes_override: BoxSequence | None = None,
    ) -> GeneratedVideo:
        """
        Generate one RGBA video.

        Args:
            cond_rgba: Conditioned straight-alpha image [H, W, 4]
            request: Prompt, seed and adapter toggle
            boxes_override: Replaces the boxes derived from the conditioned image

        Raises:
            ConditionImageError: Image size differs from the trained resolution
            BoxError: Override boxes out of range
        """
        self._check_condition(cond_rgba)
        scale = self.backbone.latent_scale
        cond_latent = self.autoencoder.encode(cond_rgba[None].astype(np.float32)).z_adj * scale
        with no_grad():
            text = self.backbone.text([request.prompt]).data

        boxes, source = self.resolve_boxes(cond_rgba, boxes_override)
        use_adapter = request.use_amcm and self.adapter is not None
        if request.use_amcm and self.adapter is None:
            logger.warning("No trained AMCM adapter; generating without motion constraint")
        model = self.backbone.eps_model(
            cond_latent.astype(np.float32),
            text,
            boxes.boxes[None].astype(np.float32) if use_adapter else None,
            self.adapter if use_adapter else None,
        )

        rng = np.random.default_rng(request.seed)
        c, h, w = cond_latent.shape[1:]
        x_t = rng.standard_normal((1, self.config.frames, c, h, w)).astype(np.float32)
        z0 = self.sampler.sample(model, x_t, rng)[0]

        frames = np.clip(self.autoencoder.decode(z0 / scale), 0.0, 1.0).astype(np.float32)
        logger.info(
            "Video generated",
            extra={"seed": request.seed, "amcm": use_adapter, "boxes": source},
        )
        return GeneratedVideo(
            frames=frames,
            boxes=boxes,
            box_source=source,
            request=request.model_copy(update={"use_amcm": use_adapter}),
        )

    def generate_many(
        self,
        conds: list[np.ndarray],
        requests: list[GenerationRequest],
        threads: int = 1,
    ) -> list[GeneratedVideo]:
        """Generate several videos in a thread pool; output order follows the input."""
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            return list(pool.map(self.generate, conds, requests))


def save_generation(
    video: GeneratedVideo,
    out_dir: Path,
    config: RunConfig,
    upstream: dict[str, str] | None = None,
) -> Path:
    """
    Write RGBA frames, a preview composited over black, the boxes used and metadata.

    Returns:
        The output directory
    """
    n, h, w, _ = video.frames.shape
    save_rgba_sequence(RGBAVideo(frames=video.frames, caption=video.request.prompt), out_dir)
    save_rgb_sequence(composite_over(video.frames, BLACK), out_dir / "preview")
    write_box_file(out_dir / BOXES_FILENAME, video.boxes)
    meta = GenerationMeta(
        prompt=video.request.prompt,
        seed=video.request.seed,
        frames=n,
        height=h,
        width=w,
        used_amcm=video.request.use_amcm,
        box_source=video.box_source,
        sampler_steps=config.sampler_steps,
        eta=config.eta,
        config_hash=config_hash(config),
        upstream=dict(upstream or {}),
    )
    (out_dir / GENERATION_META_FILENAME).write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    return out_dir
