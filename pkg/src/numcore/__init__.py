"""Differentiable tensor substrate: autograd, layers, optimizer, checkpoints."""

from .tensor import Precision, Tensor, no_grad, precision, wide_precision

__all__ = ["Precision", "Tensor", "no_grad", "precision", "wide_precision"]
