"""From-scratch numpy tensor engine: autograd, layers, losses, models and Adam."""

from app.neural.gradcheck import GradcheckError, gradcheck, gradcheck_many
from app.neural.losses import (
    bce_loss,
    cycle_consistency_loss,
    discriminator_loss,
    gan_value,
    generator_loss,
    l1_loss,
)
from app.neural.models import (
    count_parameters,
    init_params,
    init_weights_gaussian,
    init_weights_he,
    patch_discriminator_forward,
    patch_discriminator_param_shapes,
    unet_forward,
    unet_param_shapes,
)
from app.neural.ops import (
    concat_channels,
    conv2d,
    conv_transpose2d,
    leaky_relu,
    maxpool2d,
    relu,
    sigmoid,
    square,
)
from app.neural.optim import Adam, AdamState, adam_step, lr_schedule
from app.neural.tensor import ShapeError, Tensor, parameters

__all__ = [
    "Adam",
    "AdamState",
    "GradcheckError",
    "ShapeError",
    "Tensor",
    "adam_step",
    "bce_loss",
    "concat_channels",
    "conv2d",
    "conv_transpose2d",
    "count_parameters",
    "cycle_consistency_loss",
    "discriminator_loss",
    "gan_value",
    "generator_loss",
    "gradcheck",
    "gradcheck_many",
    "init_params",
    "init_weights_gaussian",
    "init_weights_he",
    "l1_loss",
    "leaky_relu",
    "lr_schedule",
    "maxpool2d",
    "parameters",
    "patch_discriminator_forward",
    "patch_discriminator_param_shapes",
    "relu",
    "sigmoid",
    "square",
    "unet_forward",
    "unet_param_shapes",
]
