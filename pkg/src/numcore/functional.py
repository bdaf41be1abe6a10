"""Differentiable neural-network operations.

Convolution, normalisation, activations and attention used by the
autoencoders and the video U-Net. Kernels are vectorised with NumPy; each
op either defines its own backward closure or is composed from the
primitives in ``tensor.py``.
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import InvalidConfigError, InvalidDimensionError, ShapeError
from .tensor import Tensor, as_tensor, concat, matmul, reshape, tensor_sum, transpose


def sigmoid(x: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * out * (1.0 - out),)

    return Tensor.from_op(out, (x,), backward)


def silu(x: Tensor) -> Tensor:
    """x * sigmoid(x), the nonlinearity used throughout."""
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * (s + x.data * s * (1.0 - s)),)

    return Tensor.from_op(x.data * s, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return Tensor.from_op(out, (x,), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x[..., in] @ weight[in, out] + bias[out]."""
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError("linear", "in_features", weight.shape[0], x.shape[-1])
    out = matmul(x, weight) if x.ndim >= 2 else reshape(matmul(reshape(x, (1, -1)), weight), (-1,))
    return out + bias if bias is not None else out


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    2-D cross-correlation over NCHW input.

    Args:
        x: Input of shape [B, Cin, H, W]
        weight: Kernel of shape [Cout, Cin, kh, kw] with odd kh, kw
        bias: Optional [Cout] bias
        stride: 1 or 2
        padding: Zero padding applied to both spatial sides

    Returns:
        Tensor of shape [B, Cout, H', W'] with H' = (H + 2p - kh) // stride + 1

    Raises:
        ShapeError: Mismatched channel count or ranks
        InvalidConfigError: Even kernel or unsupported stride
    """
    if x.ndim != 4:
        raise ShapeError("conv2d", "input rank", 4, x.ndim)
    if weight.ndim != 4:
        raise ShapeError("conv2d", "weight rank", 4, weight.ndim)
    batch, cin, height, width = x.shape
    cout, wcin, kh, kw = weight.shape
    if wcin != cin:
        raise ShapeError("conv2d", "Cin", wcin, cin)
    if kh % 2 == 0 or kw % 2 == 0:
        raise InvalidConfigError(f"conv2d kernel must be odd, got {kh}x{kw}")
    if stride not in (1, 2):
        raise InvalidConfigError(f"conv2d stride must be 1 or 2, got {stride}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError("conv2d", "bias", (cout,), bias.shape)

    out_h = (height + 2 * padding - kh) // stride + 1
    out_w = (width + 2 * padding - kw) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ShapeError("conv2d", "H'/W'", ">= 1", (out_h, out_w))

    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[
        :, :, : stride * out_h : stride, : stride * out_w : stride
    ]
    # windows: [B, Cin, H', W', kh, kw]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data.reshape(1, -1, 1, 1)
    out = np.ascontiguousarray(out)

    def backward(g: np.ndarray) -> tuple[np.ndarray | None, ...]:
        gw = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        gb = g.sum(axis=(0, 2, 3)) if bias is not None else None
        cols = np.tensordot(g, weight.data, axes=([1], [0]))  # [B, H', W', Cin, kh, kw]
        gpad = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                gpad[
                    :, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride
                ] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        gx = gpad[:, :, padding : padding + height, padding : padding + width]
        grads: list[np.ndarray | None] = [gx, gw]
        if bias is not None:
            grads.append(gb)
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward)


def group_norm(
    x: Tensor,
    groups: int,
    gamma: Tensor | None = None,
    beta: Tensor | None = None,
    eps: float = 1e-5,
) -> Tensor:
    """
    Normalise each group of channels to zero mean and unit variance.

    Args:
        x: Input of shape [B, C, ...]
        groups: Number of channel groups; must divide C
        gamma: Optional per-channel scale [C]
        beta: Optional per-channel shift [C]
        eps: Added to the variance inside the square root

    Raises:
        InvalidConfigError: If groups does not divide C
    """
    if x.ndim < 2:
        raise ShapeError("group_norm", "rank", ">= 2", x.ndim)
    batch, channels = x.shape[0], x.shape[1]
    if groups < 1 or channels % groups != 0:
        raise InvalidConfigError(f"group_norm: {groups} groups do not divide {channels} channels")

    grouped = reshape(x, (batch, groups, -1))
    mean = grouped.mean(axis=2, keepdims=True)
    centred = grouped - mean
    var = (centred * centred).mean(axis=2, keepdims=True)
    normed = reshape(centred / (var + eps) ** 0.5, x.shape)

    affine_shape = (1, channels) + (1,) * (x.ndim - 2)
    if gamma is not None:
        normed = normed * reshape(gamma, affine_shape)
    if beta is not None:
        normed = normed + reshape(beta, affine_shape)
    return normed


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """
    softmax(q kᵀ / sqrt(D)) v over [B, L, D] operands.

    Keys and values may have their own length; batch and width must match.

    Raises:
        InvalidDimensionError: If D is zero or the key length is zero
        ShapeError: Mismatched batch or width
    """
    if q.ndim != 3 or k.ndim != 3 or v.ndim != 3:
        raise ShapeError("attention", "rank", 3, (q.ndim, k.ndim, v.ndim))
    dim = q.shape[-1]
    if dim == 0:
        raise InvalidDimensionError("attention", "feature width D must be positive")
    if k.shape[1] == 0:
        raise InvalidDimensionError("attention", "sequence length must be positive")
    if k.shape[0] != q.shape[0] or v.shape[0] != q.shape[0]:
        raise ShapeError("attention", "B", q.shape[0], (k.shape[0], v.shape[0]))
    if k.shape[-1] != dim:
        raise ShapeError("attention", "D", dim, k.shape[-1])
    if v.shape[1] != k.shape[1]:
        raise ShapeError("attention", "L", k.shape[1], v.shape[1])

    scores = matmul(q, transpose(k, (0, 2, 1))) * (1.0 / math.sqrt(dim))
    weights = softmax(scores, axis=-1)
    return matmul(weights, v)


def upsample_nearest2x(x: Tensor) -> Tensor:
    """Repeat every pixel of a [B, C, H, W] map into a 2x2 block."""
    b, c, h, w = x.shape
    expanded = reshape(x, (b, c, h, 1, w, 1))
    ones = as_tensor(np.ones((1, 1, 1, 2, 1, 2)), like=x)
    return reshape(expanded * ones, (b, c, 2 * h, 2 * w))


def _bilinear_matrix(in_size: int, out_size: int) -> np.ndarray:
    """Interpolation weights with half-pixel centres and edge clamping."""
    matrix = np.zeros((out_size, in_size))
    scale = in_size / out_size
    for o in range(out_size):
        src = (o + 0.5) * scale - 0.5
        src = min(max(src, 0.0), in_size - 1)
        lo = int(math.floor(src))
        hi = min(lo + 1, in_size - 1)
        frac = src - lo
        matrix[o, lo] += 1.0 - frac
        matrix[o, hi] += frac
    return matrix


def bilinear_resize(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Bilinear resize of a [B, C, H, W] map, expressed as two matrix products."""
    _, _, h, w = x.shape
    rows = as_tensor(_bilinear_matrix(h, out_h), like=x)
    cols = as_tensor(_bilinear_matrix(w, out_w).T, like=x)
    return matmul(matmul(rows, x), cols)


def sum_squared_error(pred: Tensor, target: Tensor | np.ndarray, batch: int) -> Tensor:
    """Sum over all elements of (pred - target)^2, divided by the batch size."""
    diff = pred - target
    return tensor_sum(diff * diff) * (1.0 / batch)


def sinusoidal_embedding(positions: np.ndarray, dim: int, dtype: np.dtype) -> np.ndarray:
    """
    Fixed sin/cos features for integer positions (timesteps or frame indices).

    Returns:
        Array of shape [len(positions), dim]
    """
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half, 1))
    args = np.asarray(positions, dtype=np.float64)[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if dim % 2:
        emb = np.concatenate([emb, np.zeros((emb.shape[0], 1))], axis=1)
    return emb.astype(dtype)


__all__ = [
    "bilinear_resize",
    "concat",
    "conv2d",
    "group_norm",
    "linear",
    "scaled_dot_attention",
    "sigmoid",
    "silu",
    "sinusoidal_embedding",
    "softmax",
    "sum_squared_error",
    "upsample_nearest2x",
]
