"""Reconstruction and adversarial objectives."""

from __future__ import annotations

from typing import Literal

import numpy as np

from app.neural.tensor import Array, ShapeError, Tensor

PROB_EPS = 1e-7


def _clamped(p: Tensor) -> tuple[Array, Array]:
    clipped = np.clip(p.data, PROB_EPS, 1.0 - PROB_EPS)
    inside = (p.data >= PROB_EPS) & (p.data <= 1.0 - PROB_EPS)
    return clipped, inside


def _target_array(target: Tensor | Array, like: Tensor, op: str) -> Array:
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=like.dtype)
    if t.shape != like.shape:
        raise ShapeError(f"{op}: shape mismatch {like.shape} vs {t.shape}")
    return t


def bce_loss(pred: Tensor, target: Tensor | Array) -> Tensor:
    """Mean binary cross entropy; ``pred`` is clamped to [1e-7, 1 - 1e-7]."""
    t = _target_array(target, pred, "bce_loss")
    p, inside = _clamped(pred)
    n = p.size
    value = -np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))

    def backward(g: Array) -> None:
        pred.accumulate(g * inside * ((1.0 - t) / (1.0 - p) - t / p) / n)

    return Tensor(np.asarray(value, dtype=pred.dtype), parents=(pred,), backward=backward, op="bce")


def _mean_log(p: Tensor, complement: bool) -> Tensor:
    clipped, inside = _clamped(p)
    base = 1.0 - clipped if complement else clipped
    n = clipped.size
    sign = -1.0 if complement else 1.0

    def backward(g: Array) -> None:
        p.accumulate(g * inside * sign / (base * n))

    return Tensor(np.asarray(np.log(base).mean(), dtype=p.dtype), parents=(p,), backward=backward, op="mean_log")


def gan_value(d_real: Tensor, d_fake: Tensor) -> Tensor:
    """V(D, G) = mean log D(x) + mean log(1 - D(G(z))) over probabilities."""
    return _mean_log(d_real, complement=False) + _mean_log(d_fake, complement=True)


def discriminator_loss(d_real: Tensor, d_fake: Tensor) -> Tensor:
    return -gan_value(d_real, d_fake)


def generator_loss(
    d_fake: Tensor,
    objective: Literal["minimax", "non_saturating"] = "minimax",
) -> Tensor:
    """
    Generator side of the adversarial game.

    ``minimax`` minimises mean log(1 - D(G(z))) exactly as it appears in the
    value function; ``non_saturating`` minimises -mean log D(G(z)) instead.
    """
    if objective == "minimax":
        return _mean_log(d_fake, complement=True)
    if objective == "non_saturating":
        return -_mean_log(d_fake, complement=False)
    raise ValueError(f"Unknown generator objective: {objective}")


def l1_loss(x: Tensor, y: Tensor | Array) -> Tensor:
    """Mean absolute error; gradients flow to both operands when they track them."""
    other = _target_array(y, x, "l1_loss")
    diff = x.data - other
    sign = np.sign(diff)
    n = diff.size
    parents = (x, y) if isinstance(y, Tensor) else (x,)

    def backward(g: Array) -> None:
        if x.requires_grad:
            x.accumulate(g * sign / n)
        if isinstance(y, Tensor) and y.requires_grad:
            y.accumulate(-g * sign / n)

    return Tensor(np.asarray(np.abs(diff).mean(), dtype=x.dtype), parents=parents, backward=backward, op="l1")


def cycle_consistency_loss(x: Tensor, x_reconstructed: Tensor) -> Tensor:
    """L1 distance between an input and its round trip through both generators."""
    return l1_loss(x_reconstructed, x)
