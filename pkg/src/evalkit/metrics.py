"""Desk-scale quality metrics over straight-alpha RGBA videos."""

import numpy as np

from src.amcm.boxes import BoxSequence, dilate_box, pixel_box_from_normalised

from .constants import MASK_THRESHOLD, PSNR_CAP_DB
from .exceptions import MetricShapeError


def _same_shape(metric: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise MetricShapeError(metric, b.shape, a.shape)


def alpha_iou(pred_alpha: np.ndarray, gt_alpha: np.ndarray, threshold: float = MASK_THRESHOLD) -> float:
    """
    Intersection over union of thresholded alpha masks.

    Two empty masks count as a perfect match (1.0).
    """
    _same_shape("alpha_iou", pred_alpha, gt_alpha)
    pred = pred_alpha > threshold
    gt = gt_alpha > threshold
    union = np.logical_or(pred, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred, gt).sum() / union)


def psnr(pred: np.ndarray, gt: np.ndarray) -> float:
    """10 log10(1 / MSE) for [0, 1] data, capped at 99 dB."""
    _same_shape("psnr", pred, gt)
    mse = float(np.mean((np.asarray(pred, np.float64) - np.asarray(gt, np.float64)) ** 2))
    if mse <= 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB))


def box_mask(row: np.ndarray, valid: bool, height: int, width: int, dilation: int) -> np.ndarray:
    """Boolean [H, W] mask of a normalised box grown by ``dilation``; a frame without a box is unconstrained."""
    if not valid:
        return np.ones((height, width), dtype=bool)
    box = dilate_box(pixel_box_from_normalised(row, height, width), dilation, height, width)
    mask = np.zeros((height, width), dtype=bool)
    mask[box.y_min : box.y_max + 1, box.x_min : box.x_max + 1] = True
    return mask


def artifact_escape_ratio(alphas: np.ndarray, boxes: BoxSequence, dilation: int = 1) -> float:
    """
    Share of alpha mass outside the dilated constraint box of its frame.

    Args:
        alphas: [N, H, W] alpha mattes
        boxes: Normalised constraint boxes, one per frame
        dilation: Pixels added on each side of every box

    Returns:
        0 when every bit of alpha stays in its box; 0 as well for a video without alpha
    """
    if alphas.shape[0] != len(boxes):
        raise MetricShapeError("artifact_escape_ratio", (len(boxes),), (alphas.shape[0],))
    total = float(alphas.sum())
    if total <= 0.0:
        return 0.0
    _, height, width = alphas.shape
    outside = 0.0
    for alpha, row, valid in zip(alphas, boxes.boxes, boxes.valid):
        inside = box_mask(row, bool(valid), height, width, dilation)
        outside += float(alpha[~inside].sum())
    return outside / total


def boundary_ring(mask: np.ndarray) -> np.ndarray:
    """Pixels of ``mask`` [..., H, W] with at least one 4-neighbour outside it."""
    padded = np.pad(mask, [(0, 0)] * (mask.ndim - 2) + [(1, 1), (1, 1)], mode="edge")
    interior = (
        padded[..., :-2, 1:-1] & padded[..., 2:, 1:-1] & padded[..., 1:-1, :-2] & padded[..., 1:-1, 2:]
    )
    return mask & ~interior


def edge_fringe_score(pred_alpha: np.ndarray, gt_alpha: np.ndarray) -> float:
    """Mean absolute alpha error on the 1-px boundary ring of the ground-truth foreground."""
    _same_shape("edge_fringe_score", pred_alpha, gt_alpha)
    ring = boundary_ring(gt_alpha > MASK_THRESHOLD)
    if not ring.any():
        return 0.0
    return float(np.abs(pred_alpha - gt_alpha)[ring].mean())


def temporal_flicker(alphas: np.ndarray) -> float:
    """Mean absolute alpha change between consecutive frames of [N, H, W]."""
    if alphas.shape[0] < 2:
        return 0.0
    return float(np.abs(np.diff(alphas, axis=0)).mean())
