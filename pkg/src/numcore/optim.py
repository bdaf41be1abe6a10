"""AdamW with decoupled weight decay.

``adamw_step`` is the pure update (new arrays, new state) used by tests and
by the ``AdamW`` optimizer, which applies it in place to named parameters.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NonFiniteError, ShapeError
from .layers import Parameter


@dataclass(frozen=True)
class AdamWState:
    """Optimizer moments and hyperparameters; ``step`` counts applied updates."""

    lr: float = 3e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamWState,
) -> tuple[dict[str, np.ndarray], AdamWState]:
    """
    Apply one AdamW update.

    Decay is applied to the parameter directly (p <- p - lr*wd*p), never
    through the gradient. Moments are bias-corrected with the new step
    count. Parameters without a gradient keep their value and moments.

    Args:
        params: Current parameter values by name
        grads: Gradients by name (subset of params)
        state: Optimizer state before the update

    Returns:
        Tuple of (updated parameter arrays, updated state)

    Raises:
        NonFiniteError: Any gradient contains NaN/Inf; nothing is updated
        ShapeError: Gradient or moment shape differs from its parameter
    """
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ShapeError("adamw_step", name, params[name].shape, g.shape)
        if not np.isfinite(g).all():
            raise NonFiniteError("gradient", name)

    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**step
    correction2 = 1.0 - b2**step

    new_params: dict[str, np.ndarray] = {}
    new_m = dict(state.m)
    new_v = dict(state.v)
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            new_params[name] = p
            continue
        dtype = p.dtype
        m = state.m.get(name)
        v = state.v.get(name)
        m = np.zeros_like(p) if m is None else m
        v = np.zeros_like(p) if v is None else v
        if m.shape != p.shape:
            raise ShapeError("adamw_step", f"m[{name}]", p.shape, m.shape)

        m = (b1 * m + (1.0 - b1) * g).astype(dtype)
        v = (b2 * v + (1.0 - b2) * g * g).astype(dtype)
        m_hat = m / correction1
        v_hat = v / correction2
        decayed = p - state.lr * state.weight_decay * p
        new_params[name] = (decayed - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(dtype)
        new_m[name] = m
        new_v[name] = v

    return new_params, replace(state, step=step, m=new_m, v=new_v)


class AdamW:
    """
    In-place AdamW over a fixed set of named parameters.

    Example:
        opt = AdamW(model.trainable_parameters(), lr=3e-5)
        loss.backward()
        opt.step()
        opt.zero_grad()
    """

    def __init__(
        self,
        params: Mapping[str, Parameter],
        lr: float = 3e-5,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.params = dict(params)
        self.state = AdamWState(
            lr=lr, beta1=betas[0], beta2=betas[1], eps=eps, weight_decay=weight_decay
        )

    def step(self) -> None:
        """Update every parameter that received a gradient."""
        values = {n: p.data for n, p in self.params.items()}
        grads = {n: p.grad for n, p in self.params.items() if p.grad is not None}
        updated, self.state = adamw_step(values, grads, self.state)
        for name, param in self.params.items():
            param.data = updated[name]

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Moments flattened to checkpoint-friendly names."""
        arrays = {f"optimizer.m.{n}": a for n, a in self.state.m.items()}
        arrays.update({f"optimizer.v.{n}": a for n, a in self.state.v.items()})
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray], step: int) -> None:
        """Restore moments written by ``state_arrays``."""
        m: dict[str, np.ndarray] = {}
        v: dict[str, np.ndarray] = {}
        for key, arr in arrays.items():
            _, kind, name = key.split(".", 2)
            if name not in self.params:
                continue
            dtype = self.params[name].data.dtype
            (m if kind == "m" else v)[name] = np.asarray(arr, dtype=dtype)
        self.state = replace(self.state, step=step, m=m, v=v)
