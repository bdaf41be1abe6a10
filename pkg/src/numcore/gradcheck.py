"""Finite-difference verification of reverse-mode gradients."""

from collections.abc import Callable, Sequence

import numpy as np

from .exceptions import GradCheckError, InvalidDimensionError
from .tensor import Tensor, no_grad, wide_precision


def grad_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-4,
    max_elements: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """
    Compare reverse-mode gradients of a scalar function with central differences.

    Inputs are cast to float64 in place and ``f`` is evaluated in wide
    precision. The error per element is
    |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).

    Args:
        f: Deterministic scalar-valued function called as ``f(*inputs)``
        inputs: Tensors to differentiate with respect to
        h: Finite-difference step
        max_elements: Check a random subset of this many elements per input
        rng: Generator used to pick the subset

    Returns:
        Maximum relative error over all checked elements

    Raises:
        GradCheckError: ``f`` is not deterministic
        InvalidDimensionError: ``f`` does not return a scalar
    """
    with wide_precision():
        for x in inputs:
            x.data = np.ascontiguousarray(x.data, dtype=np.float64)
            x.requires_grad = True
            x.grad = None

        out = f(*inputs)
        if out.size != 1:
            raise InvalidDimensionError("grad_check", f"f must return a scalar, got {out.shape}")
        with no_grad():
            repeat = f(*inputs)
        if not np.array_equal(out.data, repeat.data):
            raise GradCheckError("check invalid: f is not deterministic for identical inputs")

        out.backward()
        analytic = [
            x.grad.copy() if x.grad is not None else np.zeros_like(x.data) for x in inputs
        ]

        worst = 0.0
        picker = rng or np.random.default_rng(0)
        for x, g_ad in zip(inputs, analytic):
            flat = x.data.reshape(-1)
            indices = np.arange(flat.size)
            if max_elements is not None and flat.size > max_elements:
                indices = picker.choice(flat.size, size=max_elements, replace=False)
            for i in indices:
                orig = flat[i]
                with no_grad():
                    flat[i] = orig + h
                    plus = f(*inputs).item()
                    flat[i] = orig - h
                    minus = f(*inputs).item()
                flat[i] = orig
                g_fd = (plus - minus) / (2.0 * h)
                g = float(g_ad.reshape(-1)[i])
                err = abs(g - g_fd) / max(1.0, abs(g), abs(g_fd))
                worst = max(worst, err)

        for x in inputs:
            x.grad = None
    return worst
