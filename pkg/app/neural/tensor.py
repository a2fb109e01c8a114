"""
Numpy-backed tensor with reverse-mode automatic differentiation.

Each operation records its parents and a closure that pushes the output
gradient back to them; ``backward`` replays those closures in reverse
topological order. Gradients accumulate, so reused tensors sum their
contributions.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.floating]


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(
        self,
        data: npt.ArrayLike,
        requires_grad: bool = False,
        parents: tuple["Tensor", ...] = (),
        backward: Callable[[Array], None] | None = None,
        op: str = "",
    ) -> None:
        array = np.asarray(data)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: Array = array
        self.grad: Array | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None
        self.op = op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op or 'leaf'})"

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> Array:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, grad: Array) -> None:
        if grad.shape != self.data.shape:
            raise ShapeError(f"Gradient shape {grad.shape} does not match tensor shape {self.data.shape}")
        if self.grad is None:
            self.grad = grad.astype(self.data.dtype, copy=True)
        else:
            self.grad += grad

    def backward(self, grad: npt.ArrayLike | None = None) -> None:
        if not self.requires_grad:
            raise ShapeError("backward() called on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a gradient needs a scalar output")
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=self.data.dtype)

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
            stack.extend((parent, False) for parent in node._parents if id(parent) not in visited)

        self.accumulate(seed)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Elementwise arithmetic on same-shape tensors or Python scalars.

    def __add__(self, other: "Tensor | float") -> "Tensor":
        if not isinstance(other, Tensor):
            value = float(other)
            return Tensor(self.data + value, parents=(self,), backward=lambda g: self.accumulate(g), op="add")
        _check_same_shape(self, other, "add")
        b = other

        def backward(g: Array) -> None:
            if self.requires_grad:
                self.accumulate(g)
            if b.requires_grad:
                b.accumulate(g)

        return Tensor(self.data + b.data, parents=(self, b), backward=backward, op="add")

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other: "Tensor | float") -> "Tensor":
        return self + (-other)

    def __mul__(self, other: float) -> "Tensor":
        if isinstance(other, Tensor):
            raise TypeError("Tensor * Tensor is not supported; use the ops module")
        scale = float(other)
        return Tensor(
            self.data * scale,
            parents=(self,),
            backward=lambda g: self.accumulate(g * scale),
            op="scale",
        )

    __rmul__ = __mul__

    def sum(self) -> "Tensor":
        return Tensor(
            self.data.sum(dtype=self.data.dtype),
            parents=(self,),
            backward=lambda g: self.accumulate(np.broadcast_to(g, self.data.shape).copy()),
            op="sum",
        )

    def mean(self) -> "Tensor":
        count = self.data.size
        return Tensor(
            self.data.mean(dtype=self.data.dtype),
            parents=(self,),
            backward=lambda g: self.accumulate(np.broadcast_to(g / count, self.data.shape).copy()),
            op="mean",
        )


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def parameters(data: dict[str, Array]) -> dict[str, Tensor]:
    """Wrap raw arrays as trainable leaves."""
    return {name: Tensor(value, requires_grad=True) for name, value in data.items()}


def zero_grads(params: Iterable[Tensor]) -> None:
    for param in params:
        param.zero_grad()
