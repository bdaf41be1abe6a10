"""Parameterised layers and the Module container.

Modules discover their parameters by walking instance attributes in
definition order, so parameter names and ordering are stable across
runs; this is what makes checkpoints bit-reproducible.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from typing_extensions import Self

import numpy as np

from . import functional as F
from .exceptions import InvalidConfigError, ShapeError
from .tensor import Tensor, get_default_dtype


class Parameter(Tensor):
    """A leaf tensor that is trained unless frozen."""

    __slots__ = ()

    def __init__(self, data: Any, name: str | None = None):
        super().__init__(data, requires_grad=True, name=name)


class Module:
    """
    Base class for layers and models.

    Subclasses assign ``Parameter``, ``Module`` and ``ModuleList`` attributes
    in ``__init__`` and implement ``forward``.
    """

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self) -> dict[str, Parameter]:
        return {n: p for n, p in self.named_parameters() if p.requires_grad}

    def freeze(self) -> Self:
        """Stop gradient flow into every parameter of this module."""
        for p in self.parameters():
            p.requires_grad = False
            p.grad = None
        return self

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {n: p.data for n, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        """
        Copy arrays into parameters, casting to each parameter's dtype.

        Raises:
            InvalidConfigError: Missing or unexpected keys when strict
            ShapeError: A stored array has the wrong shape
        """
        own = dict(self.named_parameters())
        if strict:
            missing = sorted(set(own) - set(state))
            unexpected = sorted(set(state) - set(own))
            if missing or unexpected:
                raise InvalidConfigError(
                    f"state mismatch: missing={missing[:5]} unexpected={unexpected[:5]}"
                )
        for name, param in own.items():
            if name not in state:
                continue
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise ShapeError("load_state_dict", name, param.shape, value.shape)
            param.data = value.astype(param.dtype, copy=True)

    def to_precision(self) -> Self:
        """Cast every parameter to the active default dtype."""
        dtype = get_default_dtype()
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        return self


class ModuleList(Module):
    """Ordered container whose items are registered as ``0.``, ``1.``, ..."""

    def __init__(self, modules: list[Module] | None = None):
        self._items: list[Module] = list(modules or [])

    def append(self, module: Module) -> None:
        self._items.append(module)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for i, module in enumerate(self._items):
            yield from module.named_parameters(f"{prefix}{i}.")


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """Affine map over the last axis."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        bias: bool = True,
        zero_init: bool = False,
    ):
        self.in_features = in_features
        self.out_features = out_features
        shape = (in_features, out_features)
        init = np.zeros(shape) if zero_init else _uniform(rng, shape, in_features)
        self.weight = Parameter(init)
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class Conv2d(Module):
    """Square-kernel 2-D convolution with 'same'-style padding by default."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        stride: int = 1,
        padding: int | None = None,
        zero_init: bool = False,
    ):
        if kernel_size % 2 == 0:
            raise InvalidConfigError(f"kernel_size must be odd, got {kernel_size}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(np.zeros(shape) if zero_init else _uniform(rng, shape, fan_in))
        self.bias = Parameter(np.zeros(out_channels))

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class GroupNorm(Module):
    """Group normalisation with learned per-channel affine."""

    def __init__(self, groups: int, channels: int, eps: float = 1e-5):
        groups = min(groups, channels)
        if channels % groups != 0:
            raise InvalidConfigError(f"{groups} groups do not divide {channels} channels")
        self.groups = groups
        self.eps = eps
        self.gamma = Parameter(np.ones(channels))
        self.beta = Parameter(np.zeros(channels))

    def forward(self, x: Tensor) -> Tensor:
        return F.group_norm(x, self.groups, self.gamma, self.beta, self.eps)


class Attention(Module):
    """
    Single-head attention over token sequences [B, L, C].

    With ``context_dim`` set, keys and values come from a separate context
    sequence (cross-attention).
    """

    def __init__(
        self,
        dim: int,
        rng: np.random.Generator,
        context_dim: int | None = None,
        zero_out: bool = False,
    ):
        kv_dim = context_dim or dim
        self.to_q = Linear(dim, dim, rng, bias=False)
        self.to_k = Linear(kv_dim, dim, rng, bias=False)
        self.to_v = Linear(kv_dim, dim, rng, bias=False)
        self.to_out = Linear(dim, dim, rng, zero_init=zero_out)

    def forward(self, x: Tensor, context: Tensor | None = None) -> Tensor:
        ctx = x if context is None else context
        attended = F.scaled_dot_attention(self.to_q(x), self.to_k(ctx), self.to_v(ctx))
        return self.to_out(attended)


class FeedForward(Module):
    """Two-layer SiLU MLP with a 2x hidden width."""

    def __init__(self, dim: int, rng: np.random.Generator, mult: int = 2):
        self.fc1 = Linear(dim, dim * mult, rng)
        self.fc2 = Linear(dim * mult, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(F.silu(self.fc1(x)))
