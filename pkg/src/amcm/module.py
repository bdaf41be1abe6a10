"""The motion-constraint fusion block and the per-U-Net adapter that holds one per hook."""

import numpy as np

from src.numcore import functional as F
from src.numcore.layers import Attention, Linear, Module, ModuleList
from src.numcore.tensor import Tensor, as_tensor, broadcast_to, concat
from src.vdm.unet import frame_position_embedding, from_frame_sequences, to_frame_sequences

from .exceptions import FrameCountMismatchError


def box_feature_map(boxes: np.ndarray, height: int, width: int, like: Tensor) -> Tensor:
    """[B, N, 4] boxes -> [B*N, 4, h, w], each frame's box broadcast over the grid."""
    b, n, _ = boxes.shape
    flat = as_tensor(np.asarray(boxes).reshape(b * n, 4, 1, 1), like=like)
    return broadcast_to(flat, (b * n, 4, height, width))


class AMCMBlock(Module):
    """
    Fuse per-frame box coordinates into a block's features.

    The box 4-vector is repeated over every spatial site and concatenated
    with the features; two fully connected layers bring C + 4 channels back
    to C, temporal attention mixes the N frames at each site, and a
    zero-initialised projection is added to the input. An untrained block
    therefore returns its input unchanged.
    """

    def __init__(self, channels: int, rng: np.random.Generator):
        self.channels = channels
        self.fc1 = Linear(channels + 4, channels, rng)
        self.fc2 = Linear(channels, channels, rng)
        self.attn = Attention(channels, rng)
        self.proj_out = Linear(channels, channels, rng, zero_init=True)

    def forward(self, features: Tensor, boxes: np.ndarray, frames: int) -> Tensor:
        """
        Args:
            features: Spatial-transformer output [B*N, C, h, w]
            boxes: Normalised boxes [B, N, 4]
            frames: N

        Raises:
            FrameCountMismatchError: Boxes and features disagree on N
        """
        boxes = np.asarray(boxes)
        bn, _, h, w = features.shape
        if boxes.ndim != 3 or boxes.shape[1] != frames or boxes.shape[0] * frames != bn:
            feature_frames = bn // max(boxes.shape[0], 1) if boxes.ndim == 3 else bn
            box_frames = boxes.shape[1] if boxes.ndim == 3 else boxes.shape[0]
            raise FrameCountMismatchError(feature_frames, box_frames)

        fused = concat([features, box_feature_map(boxes, h, w, features)], axis=1)
        seq = to_frame_sequences(fused, frames)
        seq = self.fc2(F.silu(self.fc1(seq)))
        seq = seq + frame_position_embedding(frames, self.channels)
        seq = seq + self.attn(seq)
        return features + from_frame_sequences(self.proj_out(seq), frames, h, w)


class AMCMAdapter(Module):
    """
    One AMCM block per U-Net hook, applied by the backbone before each temporal transformer.

    Example:
        adapter = AMCMAdapter(unet.hook_channels(), rng)
        eps = unet(noisy, t, cond, text, boxes=boxes, adapter=adapter)
    """

    def __init__(self, hook_channels: list[int], rng: np.random.Generator):
        self.blocks = ModuleList([AMCMBlock(ch, rng) for ch in hook_channels])

    def apply(self, index: int, features: Tensor, boxes: np.ndarray, frames: int) -> Tensor:
        return self.blocks[index](features, boxes, frames)
