"""
U-Net generator and patch discriminator as pure functions of a parameter map.

Parameters live in flat ``{name: array}`` dictionaries so they can be
initialised, optimised and checkpointed without any module objects. The
shape tables below are the single source of truth for parameter names.
"""

from __future__ import annotations

import math
from collections.abc import Mapping

import numpy as np

from app.neural.ops import concat_channels, conv2d, conv_transpose2d, leaky_relu, maxpool2d, relu, sigmoid
from app.neural.tensor import ShapeError, Tensor
from app.schemas.training import InitScheme, PatchDiscriminatorConfig, UNetConfig


Shapes = dict[str, tuple[int, ...]]

LEAKY_SLOPE = 0.2
DISC_KERNEL = 4
INPUT_SHIFT = 0.5


def _conv(shapes: Shapes, name: str, out_ch: int, in_ch: int, k: int) -> None:
    shapes[f"{name}.weight"] = (out_ch, in_ch, k, k)
    shapes[f"{name}.bias"] = (out_ch,)


def unet_param_shapes(cfg: UNetConfig) -> Shapes:
    shapes: Shapes = {}
    widths = [cfg.base_channels * 2**level for level in range(cfg.depth + 1)]
    in_ch = cfg.in_channels
    for level in range(cfg.depth):
        _conv(shapes, f"enc{level}.conv1", widths[level], in_ch, 3)
        _conv(shapes, f"enc{level}.conv2", widths[level], widths[level], 3)
        in_ch = widths[level]
    _conv(shapes, "bottleneck.conv1", widths[-1], in_ch, 3)
    _conv(shapes, "bottleneck.conv2", widths[-1], widths[-1], 3)
    for level in reversed(range(cfg.depth)):
        # transposed conv weights are (in, out, k, k)
        shapes[f"dec{level}.up.weight"] = (widths[level + 1], widths[level], 2, 2)
        shapes[f"dec{level}.up.bias"] = (widths[level],)
        _conv(shapes, f"dec{level}.conv1", widths[level], 2 * widths[level], 3)
        _conv(shapes, f"dec{level}.conv2", widths[level], widths[level], 3)
    _conv(shapes, "head", cfg.out_channels, widths[0], 1)
    return shapes


def patch_discriminator_param_shapes(cfg: PatchDiscriminatorConfig) -> Shapes:
    shapes: Shapes = {}
    in_ch = cfg.in_channels
    for block in range(cfg.layers):
        width = cfg.base_channels * 2**block
        _conv(shapes, f"block{block}", width, in_ch, DISC_KERNEL)
        in_ch = width
    _conv(shapes, "head", 1, in_ch, 1)
    return shapes


def count_parameters(shapes: Shapes) -> int:
    return sum(math.prod(shape) for shape in shapes.values())


def _double_conv(params: Mapping[str, Tensor], prefix: str, x: Tensor) -> Tensor:
    x = relu(conv2d(x, params[f"{prefix}.conv1.weight"], params[f"{prefix}.conv1.bias"], padding=1))
    return relu(conv2d(x, params[f"{prefix}.conv2.weight"], params[f"{prefix}.conv2.bias"], padding=1))


def unet_forward(cfg: UNetConfig, params: Mapping[str, Tensor], x: Tensor) -> Tensor:
    """
    Encoder-decoder with skip connections; output has the input's spatial size.

    Parameters
    ----------
    cfg : UNetConfig
        Depth and channel widths.
    params : Mapping[str, Tensor]
        Parameters named as in :func:`unet_param_shapes`.
    x : Tensor
        Batch of shape (N, in_channels, H, W) with H and W divisible by 2**depth.

    Returns
    -------
    Tensor
        Sigmoid outputs of shape (N, out_channels, H, W).
    """
    if x.data.ndim != 4 or x.shape[1] != cfg.in_channels:
        raise ShapeError(f"unet_forward: expected (N, {cfg.in_channels}, H, W), got {x.shape}")
    factor = 2**cfg.depth
    h, w = x.shape[2], x.shape[3]
    if h % factor or w % factor:
        raise ShapeError(f"unet_forward: spatial size {h}x{w} is not divisible by 2**depth = {factor}")

    skips: list[Tensor] = []
    out = x - INPUT_SHIFT
    for level in range(cfg.depth):
        out = _double_conv(params, f"enc{level}", out)
        skips.append(out)
        out = maxpool2d(out)
    out = _double_conv(params, "bottleneck", out)
    for level in reversed(range(cfg.depth)):
        out = conv_transpose2d(out, params[f"dec{level}.up.weight"], params[f"dec{level}.up.bias"], stride=2)
        out = concat_channels([skips[level], out])
        out = _double_conv(params, f"dec{level}", out)
    return sigmoid(conv2d(out, params["head.weight"], params["head.bias"]))


def patch_discriminator_forward(cfg: PatchDiscriminatorConfig, params: Mapping[str, Tensor], x: Tensor) -> Tensor:
    """Raw patch scores of shape (N, 1, H / 2**layers, W / 2**layers)."""
    if x.data.ndim != 4 or x.shape[1] != cfg.in_channels:
        raise ShapeError(f"patch_discriminator_forward: expected (N, {cfg.in_channels}, H, W), got {x.shape}")
    factor = 2**cfg.layers
    if x.shape[2] % factor or x.shape[3] % factor:
        raise ShapeError(
            f"patch_discriminator_forward: spatial size {x.shape[2]}x{x.shape[3]} is not divisible by {factor}"
        )
    out = x
    for block in range(cfg.layers):
        out = conv2d(out, params[f"block{block}.weight"], params[f"block{block}.bias"], stride=2, padding=1)
        out = leaky_relu(out, LEAKY_SLOPE)
    return conv2d(out, params["head.weight"], params["head.bias"])


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    if name.endswith("up.weight"):
        # stride == kernel, so each output pixel sees one input pixel per channel
        return shape[0]
    return math.prod(shape[1:])


def init_weights_gaussian(
    rng: np.random.Generator,
    shapes: Shapes,
    std: float = 0.02,
    dtype: type[np.floating] = np.float32,
) -> dict[str, np.ndarray]:
    """Weights drawn i.i.d. from N(0, std**2); biases zero."""
    params: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name.endswith(".bias"):
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            params[name] = rng.normal(0.0, std, size=shape).astype(dtype)
    return params


def init_weights_he(
    rng: np.random.Generator,
    shapes: Shapes,
    dtype: type[np.floating] = np.float32,
) -> dict[str, np.ndarray]:
    """He-normal weights (std = sqrt(2 / fan_in)); biases zero."""
    params: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name.endswith(".bias"):
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            params[name] = rng.normal(0.0, math.sqrt(2.0 / _fan_in(name, shape)), size=shape).astype(dtype)
    return params


def init_params(
    rng: np.random.Generator,
    shapes: Shapes,
    scheme: InitScheme,
    std: float = 0.02,
    dtype: type[np.floating] = np.float32,
) -> dict[str, np.ndarray]:
    if scheme == "gaussian":
        return init_weights_gaussian(rng, shapes, std=std, dtype=dtype)
    if scheme == "he":
        return init_weights_he(rng, shapes, dtype=dtype)
    raise ValueError(f"Unknown init scheme: {scheme}")


def prefixed(params: Mapping[str, Tensor], prefix: str) -> dict[str, Tensor]:
    """Select the ``prefix.``-scoped entries of a bundle with the prefix stripped."""
    head = f"{prefix}."
    return {name[len(head) :]: value for name, value in params.items() if name.startswith(head)}
