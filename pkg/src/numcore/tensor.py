"""Reverse-mode automatic differentiation over NumPy arrays.

A ``Tensor`` wraps an ndarray and, when it takes part in a differentiable
computation, remembers its parents and a backward closure mapping the
output gradient to one gradient per parent. ``Tensor.backward`` walks the
graph in reverse topological order and accumulates into ``.grad`` of the
leaves that require it.

Two precisions are available: single (float32, default, used for
training) and wide (float64, used for gradient verification). The active
precision and the grad-recording switch are context variables, so they
are per-thread and never leak across ``with`` blocks.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from enum import Enum
from typing import Any

import numpy as np

from .exceptions import InvalidDimensionError, NumCoreError, ShapeError


class Precision(str, Enum):
    """Numeric precision mode."""

    SINGLE = "single"
    WIDE = "wide"


_DTYPES: dict[Precision, np.dtype] = {
    Precision.SINGLE: np.dtype(np.float32),
    Precision.WIDE: np.dtype(np.float64),
}

_precision: ContextVar[Precision] = ContextVar("precision", default=Precision.SINGLE)
_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


def get_default_dtype() -> np.dtype:
    """Dtype new tensors are created with under the active precision."""
    return _DTYPES[_precision.get()]


@contextmanager
def precision(mode: Precision | str) -> Iterator[None]:
    """Switch the precision new tensors are created with."""
    token = _precision.set(Precision(mode))
    try:
        yield
    finally:
        _precision.reset(token)


def wide_precision() -> Any:
    """Shorthand for ``precision(Precision.WIDE)``."""
    return precision(Precision.WIDE)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording (inference, frozen encoders)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    N-dimensional real array participating in reverse-mode differentiation.

    Example:
        x = Tensor([1.0, 2.0], requires_grad=True)
        (x * x).sum().backward()
        x.grad  # array([2., 4.])
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str | None = None,
    ):
        self.data: np.ndarray = np.array(data, dtype=get_default_dtype())
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None

    @staticmethod
    def from_op(
        data: np.ndarray,
        parents: Sequence[Tensor],
        backward: BackwardFn,
    ) -> Tensor:
        """Build an op result; the graph edge is kept only when needed."""
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out.name = None
        track = _grad_enabled.get() and any(p.requires_grad for p in parents)
        out.requires_grad = track
        out._parents = tuple(parents) if track else ()
        out._backward = backward if track else None
        return out

    @staticmethod
    def constant(data: np.ndarray) -> Tensor:
        """Wrap an array without copying or casting it."""
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out.name = None
        out.requires_grad = False
        out._parents = ()
        out._backward = None
        return out

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())

    def detach(self) -> Tensor:
        return Tensor.constant(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # -- autograd --------------------------------------------------------

    def _topological_order(self) -> list[Tensor]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, grad: np.ndarray | None = None) -> None:
        """
        Accumulate d(self)/d(leaf) into every leaf that requires grad.

        Gradients add across multiple uses of a leaf and across calls until
        the leaf's ``zero_grad`` is called.

        Args:
            grad: Upstream gradient; defaults to 1 for scalar outputs

        Raises:
            NumCoreError: If this tensor is not part of a recorded graph
            InvalidDimensionError: Implicit gradient on a non-scalar output
        """
        if not self.requires_grad:
            raise NumCoreError("backward() called on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise InvalidDimensionError("backward", "implicit gradient needs a scalar output")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.shape:
            raise ShapeError("backward", "grad", self.shape, grad.shape)

        pending: dict[int, np.ndarray] = {id(self): grad}
        for node in reversed(self._topological_order()):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pending[key] + pg if key in pending else pg

    # -- operators ---------------------------------------------------------

    def __add__(self, other: Any) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        return add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        return sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return mul(self, -1.0)

    def __pow__(self, exponent: float) -> Tensor:
        return power(self, exponent)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:
        return getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return tensor_mean(self, axis, keepdims)

    def reshape(self, *shape: int) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        return transpose(self, axes)

    def exp(self) -> Tensor:
        return exp(self)

    def log(self) -> Tensor:
        return log(self)

    def sqrt(self) -> Tensor:
        return power(self, 0.5)


def as_tensor(value: Any, like: Tensor | None = None) -> Tensor:
    """Promote scalars and arrays to constant tensors matching ``like``'s dtype."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else get_default_dtype()
    return Tensor.constant(np.asarray(value, dtype=dtype))


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    if isinstance(b, Tensor):
        return as_tensor(a, like=b), b
    return as_tensor(a), as_tensor(b)


def add(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, ta.shape), unbroadcast(g, tb.shape)

    return Tensor.from_op(ta.data + tb.data, (ta, tb), backward)


def sub(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g, ta.shape), unbroadcast(-g, tb.shape)

    return Tensor.from_op(ta.data - tb.data, (ta, tb), backward)


def mul(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return unbroadcast(g * tb.data, ta.shape), unbroadcast(g * ta.data, tb.shape)

    return Tensor.from_op(ta.data * tb.data, (ta, tb), backward)


def div(a: Any, b: Any) -> Tensor:
    ta, tb = _pair(a, b)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga = g / tb.data
        gb = -g * ta.data / (tb.data * tb.data)
        return unbroadcast(ga, ta.shape), unbroadcast(gb, tb.shape)

    return Tensor.from_op(ta.data / tb.data, (ta, tb), backward)


def power(a: Tensor, exponent: float) -> Tensor:
    exponent = float(exponent)
    out = a.data ** exponent

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * exponent * a.data ** (exponent - 1.0),)

    return Tensor.from_op(out, (a,), backward)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * out,)

    return Tensor.from_op(out, (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g / a.data,)

    return Tensor.from_op(np.log(a.data), (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product with NumPy broadcasting over leading dims."""
    if a.ndim < 2 or b.ndim < 2:
        raise InvalidDimensionError("matmul", "operands need at least two dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", "inner", a.shape[-1], b.shape[-2])

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return Tensor.from_op(a.data @ b.data, (a, b), backward)


def _normalize_axes(axis: int | tuple[int, ...] | None, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(ax % ndim for ax in axes)


def tensor_sum(
    a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False
) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor.from_op(a.data.sum(axis=axes, keepdims=keepdims), (a,), backward)


def tensor_mean(
    a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False
) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return tensor_sum(a, axes, keepdims) * (1.0 / count)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.reshape(a.shape),)

    return Tensor.from_op(a.data.reshape(shape), (a,), backward)


def transpose(a: Tensor, axes: tuple[int, ...] | None = None) -> Tensor:
    perm = tuple(reversed(range(a.ndim))) if not axes else tuple(axes)
    inverse = tuple(np.argsort(perm))

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g.transpose(inverse),)

    return Tensor.from_op(a.data.transpose(perm), (a,), backward)


def getitem(a: Tensor, index: Any) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return Tensor.from_op(a.data[index], (a,), backward)


def broadcast_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (unbroadcast(g, a.shape),)

    return Tensor.from_op(np.broadcast_to(a.data, shape).copy(), (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along ``axis``; the other dimensions must agree."""
    if not tensors:
        raise InvalidDimensionError("concat", "needs at least one tensor")
    ref = tensors[0]
    axis = axis % ref.ndim
    for t in tensors[1:]:
        for dim, (x, y) in enumerate(zip(ref.shape, t.shape)):
            if dim != axis and x != y:
                raise ShapeError("concat", f"dim{dim}", x, y)
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return list(np.split(g, bounds, axis=axis))

    return Tensor.from_op(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)
