"""Adam with bias correction and the linear-decay learning-rate schedule."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from app.neural.tensor import ShapeError, Tensor


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> tuple[Mapping[str, np.ndarray], AdamState]:
    """
    One bias-corrected Adam update, applied to ``params`` in place.

    Missing moment buffers are created lazily as zeros, so a fresh
    ``AdamState`` can be used directly.
    """
    if set(grads) != set(params):
        raise ShapeError(f"adam_step: gradient names {sorted(grads)} do not match parameters {sorted(params)}")
    for name, theta in params.items():
        if grads[name].shape != theta.shape:
            raise ShapeError(f"adam_step: gradient for {name} has shape {grads[name].shape}, expected {theta.shape}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    for name, theta in params.items():
        g = grads[name]
        m = state.m.setdefault(name, np.zeros_like(theta))
        v = state.v.setdefault(name, np.zeros_like(theta))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        theta -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(theta.dtype, copy=False)
    return params, state


class Adam:
    """Adam over a named set of trainable tensors."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        self.params = dict(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self, lr: float | None = None) -> None:
        if lr is not None:
            self.state.lr = lr
        arrays = {name: tensor.data for name, tensor in self.params.items()}
        grads = {
            name: tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            for name, tensor in self.params.items()
        }
        adam_step(arrays, grads, self.state)


def lr_schedule(base_lr: float, epoch: int, total_epochs: int, decay_start: int) -> float:
    """
    Constant ``base_lr`` until ``decay_start``, then linear decay to zero at
    ``total_epochs``.
    """
    if epoch < decay_start:
        return base_lr
    if epoch >= total_epochs:
        return 0.0
    return base_lr * (total_epochs - epoch) / (total_epochs - decay_start)
