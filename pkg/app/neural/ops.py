"""Differentiable layer primitives over NCHW tensors."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.neural.tensor import Array, ShapeError, Tensor


def _require_4d(x: Tensor, op: str) -> None:
    if x.data.ndim != 4:
        raise ShapeError(f"{op}: expected a (batch, channels, height, width) tensor, got shape {x.shape}")


def _windows(x: Array, kernel: tuple[int, int], stride: int) -> Array:
    """Strided view of shape (N, C, Ho, Wo, kh, kw) over every kernel placement."""
    return sliding_window_view(x, kernel, axis=(2, 3))[:, :, ::stride, ::stride]


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    Zero-padded cross-correlation.

    ``weight`` has shape (out_channels, in_channels, kh, kw) and the output
    spatial size is ``floor((H + 2p - k) / s) + 1``.
    """
    _require_4d(x, "conv2d")
    if weight.data.ndim != 4:
        raise ShapeError(f"conv2d: weight must be 4-D, got shape {weight.shape}")
    n, c, h, w = x.shape
    f, wc, kh, kw = weight.shape
    if wc != c:
        raise ShapeError(f"conv2d: input has {c} channels but weight expects {wc}")
    if bias is not None and bias.shape != (f,):
        raise ShapeError(f"conv2d: bias shape {bias.shape} does not match {f} output channels")
    if stride < 1 or padding < 0:
        raise ShapeError("conv2d: stride must be >= 1 and padding >= 0")
    hp, wp = h + 2 * padding, w + 2 * padding
    if hp < kh or wp < kw:
        raise ShapeError(f"conv2d: kernel {kh}x{kw} larger than padded input {hp}x{wp}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = _windows(xp, (kh, kw), stride)
    ho, wo = cols.shape[2], cols.shape[3]
    out = np.tensordot(cols, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g: Array) -> None:
        if weight.requires_grad:
            weight.accumulate(np.tensordot(g, cols, axes=([0, 2, 3], [0, 2, 3])))
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            gxp = np.zeros(xp.shape, dtype=g.dtype)
            for i in range(kh):
                for j in range(kw):
                    contribution = np.tensordot(g, weight.data[:, :, i, j], axes=([1], [0]))
                    gxp[:, :, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride] += (
                        contribution.transpose(0, 3, 1, 2)
                    )
            x.accumulate(gxp[:, :, padding : padding + h, padding : padding + w])

    return Tensor(np.ascontiguousarray(out), parents=parents, backward=backward, op="conv2d")


def conv_transpose2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
) -> Tensor:
    """
    Transposed convolution, the input-gradient operator of :func:`conv2d`.

    ``weight`` has shape (in_channels, out_channels, kh, kw); the output
    spatial size is ``(H - 1) * s + k``.
    """
    _require_4d(x, "conv_transpose2d")
    if weight.data.ndim != 4:
        raise ShapeError(f"conv_transpose2d: weight must be 4-D, got shape {weight.shape}")
    n, c, h, w = x.shape
    wc, f, kh, kw = weight.shape
    if wc != c:
        raise ShapeError(f"conv_transpose2d: input has {c} channels but weight expects {wc}")
    if bias is not None and bias.shape != (f,):
        raise ShapeError(f"conv_transpose2d: bias shape {bias.shape} does not match {f} output channels")
    if stride < 1:
        raise ShapeError("conv_transpose2d: stride must be >= 1")

    ho, wo = (h - 1) * stride + kh, (w - 1) * stride + kw
    out = np.zeros((n, f, ho, wo), dtype=np.result_type(x.data, weight.data))
    for i in range(kh):
        for j in range(kw):
            contribution = np.tensordot(x.data, weight.data[:, :, i, j], axes=([1], [0]))
            out[:, :, i : i + stride * (h - 1) + 1 : stride, j : j + stride * (w - 1) + 1 : stride] += (
                contribution.transpose(0, 3, 1, 2)
            )
    if bias is not None:
        out += bias.data[None, :, None, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g: Array) -> None:
        cols = _windows(g, (kh, kw), stride)
        if x.requires_grad:
            x.accumulate(np.tensordot(cols, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2))
        if weight.requires_grad:
            weight.accumulate(np.tensordot(x.data, cols, axes=([0, 2, 3], [0, 2, 3])))
        if bias is not None and bias.requires_grad:
            bias.accumulate(g.sum(axis=(0, 2, 3)))

    return Tensor(out, parents=parents, backward=backward, op="conv_transpose2d")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor(
        np.where(mask, x.data, 0.0).astype(x.dtype, copy=False),
        parents=(x,),
        backward=lambda g: x.accumulate(g * mask),
        op="relu",
    )


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    factor = np.where(x.data > 0, 1.0, slope).astype(x.dtype)
    return Tensor(
        x.data * factor,
        parents=(x,),
        backward=lambda g: x.accumulate(g * factor),
        op="leaky_relu",
    )


def sigmoid(x: Tensor) -> Tensor:
    z = x.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)
    return Tensor(
        out,
        parents=(x,),
        backward=lambda g: x.accumulate(g * out * (1.0 - out)),
        op="sigmoid",
    )


def maxpool2d(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; the gradient goes to the first maximum."""
    _require_4d(x, "maxpool2d")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2d: spatial dims must be even, got {h}x{w}")
    blocks = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    index = blocks.argmax(axis=-1)[..., None]
    out = np.take_along_axis(blocks, index, axis=-1)[..., 0]

    def backward(g: Array) -> None:
        routed = np.zeros(blocks.shape, dtype=g.dtype)
        np.put_along_axis(routed, index, g[..., None], axis=-1)
        x.accumulate(
            routed.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
        )

    return Tensor(out, parents=(x,), backward=backward, op="maxpool2d")


def concat_channels(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate along the channel axis (skip connections, conditional pairs)."""
    if not tensors:
        raise ShapeError("concat_channels: nothing to concatenate")
    for t in tensors:
        _require_4d(t, "concat_channels")
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape[0] != first[0] or t.shape[2:] != first[2:]:
            raise ShapeError(f"concat_channels: shape mismatch {first} vs {t.shape}")
    bounds = np.cumsum([0] + [t.shape[1] for t in tensors])

    def backward(g: Array) -> None:
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                t.accumulate(g[:, lo:hi])

    return Tensor(
        np.concatenate([t.data for t in tensors], axis=1),
        parents=tuple(tensors),
        backward=backward,
        op="concat",
    )


def square(x: Tensor) -> Tensor:
    return Tensor(x.data * x.data, parents=(x,), backward=lambda g: x.accumulate(2.0 * g * x.data), op="square")
