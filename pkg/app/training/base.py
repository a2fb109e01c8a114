"""Abstract base class that every trainer must implement."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Mapping

import numpy as np

from app.neural.models import (
    Shapes,
    init_params,
    patch_discriminator_param_shapes,
    prefixed,
    unet_param_shapes,
)
from app.neural.optim import Adam, lr_schedule
from app.neural.tensor import Tensor, parameters
from app.schemas.training import ModelBundleConfig, PatchDiscriminatorConfig, TrainConfig, UNetConfig
from app.training.data import BatchSampler, TrainingConfigError
from app.training.state import Batch, HistoryRow, TrainingHistory

logger = logging.getLogger(__name__)

NetworkConfig = UNetConfig | PatchDiscriminatorConfig


class BaseTrainer(ABC):
    """
    Shared training loop over named networks.

    Subclasses declare their networks (``prefix -> config``), which
    optimiser owns which prefixes, and how one step computes and applies
    its losses. Parameters are stored flat as ``"<prefix>.<name>"`` so the
    whole bundle checkpoints as one map.
    """

    def __init__(self, bundle: ModelBundleConfig, params: Mapping[str, np.ndarray]) -> None:
        self.bundle = bundle
        self.train_cfg: TrainConfig = bundle.train
        self.check_input_size(bundle)
        expected = self.param_shapes(bundle)
        missing = sorted(set(expected) - set(params))
        if missing:
            raise TrainingConfigError(f"Missing parameters for {bundle.model_kind}: {missing[:5]}")
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                raise TrainingConfigError(
                    f"Parameter {name} has shape {tuple(params[name].shape)}, expected {shape}"
                )
        self.params: dict[str, Tensor] = parameters({name: params[name] for name in expected})
        self.optimizers = {
            group: Adam(
                {name: t for name, t in self.params.items() if name.split(".", 1)[0] in prefixes},
                lr=self.train_cfg.lr,
                beta1=self.train_cfg.beta1,
                beta2=self.train_cfg.beta2,
            )
            for group, prefixes in self.optimizer_groups().items()
        }

    @property
    @abstractmethod
    def loss_names(self) -> list[str]:
        """Columns of the per-step history."""

    @classmethod
    @abstractmethod
    def networks(cls, bundle: ModelBundleConfig) -> dict[str, NetworkConfig]:
        """Network configs keyed by parameter prefix."""

    @abstractmethod
    def optimizer_groups(self) -> dict[str, tuple[str, ...]]:
        """Optimiser name -> parameter prefixes it updates."""

    @abstractmethod
    def evaluate(self, batch: Batch) -> dict[str, float]:
        """Loss terms on ``batch`` without touching the parameters."""

    @abstractmethod
    def train_step(self, batch: Batch, lr: float) -> dict[str, float]:
        """
        One optimisation step.

        Parameters
        ----------
        batch : Batch
            Cropped noisy/clean pairs.
        lr : float
            Learning rate for this step.

        Returns
        -------
        dict[str, float]
            Loss terms measured before the update.
        """

    @abstractmethod
    def reconstruct(self, noisy: np.ndarray) -> np.ndarray:
        """Clean estimate for an (N, 1, S, S) batch of noisy inputs."""

    @abstractmethod
    def validation_loss(self, batch: Batch) -> float:
        """Reconstruction loss of the generator on a held-out batch."""

    @classmethod
    def param_shapes(cls, bundle: ModelBundleConfig) -> Shapes:
        shapes: Shapes = {}
        for prefix, cfg in cls.networks(bundle).items():
            table = unet_param_shapes(cfg) if isinstance(cfg, UNetConfig) else patch_discriminator_param_shapes(cfg)
            shapes.update({f"{prefix}.{name}": shape for name, shape in table.items()})
        return shapes

    @classmethod
    def initial_params(cls, bundle: ModelBundleConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
        train = bundle.train
        return init_params(rng, cls.param_shapes(bundle), train.resolved_init(), std=train.init_std)

    @classmethod
    def check_input_size(cls, bundle: ModelBundleConfig) -> None:
        size = bundle.train.input_size
        for prefix, cfg in cls.networks(bundle).items():
            levels = cfg.depth if isinstance(cfg, UNetConfig) else cfg.layers
            if size % 2**levels:
                raise TrainingConfigError(
                    f"input_size {size} is not divisible by 2**{levels} required by '{prefix}'"
                )

    def net(self, prefix: str) -> dict[str, Tensor]:
        return prefixed(self.params, prefix)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: tensor.data for name, tensor in self.params.items()}

    def zero_grad(self) -> None:
        for optimizer in self.optimizers.values():
            optimizer.zero_grad()

    def total_steps(self, train_count: int) -> int:
        if self.train_cfg.steps is not None:
            return self.train_cfg.steps
        batches_per_epoch = -(-train_count // self.train_cfg.batch_size)
        return self.train_cfg.epochs * batches_per_epoch

    def fit(self, sampler: BatchSampler, validation: Batch | None = None) -> TrainingHistory:
        """
        Run the configured number of steps.

        Row 0 of the history evaluates the untouched model on the first
        batch; row ``s`` holds the losses measured during step ``s``.
        """
        cfg = self.train_cfg
        steps = self.total_steps(len(sampler.images))
        history = TrainingHistory(loss_names=list(self.loss_names))
        batches = iter(sampler)
        first = next(batches)
        history.append(HistoryRow(step=0, epoch=0, lr=cfg.lr, losses=self.evaluate(first)))

        completed_epochs = 0
        for step in range(1, steps + 1):
            batch = first if step == 1 else next(batches)
            epoch = sampler.batch_epoch
            lr = lr_schedule(cfg.lr, epoch, cfg.epochs, cfg.decay_start_epoch)
            losses = self.train_step(batch, lr)
            history.append(HistoryRow(step=step, epoch=epoch, lr=lr, losses=losses))

            finished = sampler.epoch
            if finished > completed_epochs or step == steps:
                completed_epochs = finished
                self._log_epoch(step, epoch, losses, validation)
        return history

    def _log_epoch(self, step: int, epoch: int, losses: dict[str, float], validation: Batch | None) -> None:
        summary = " ".join(f"{name}={value:.5f}" for name, value in losses.items())
        if validation is None:
            logger.info("%s epoch %d step %d: %s", self.bundle.model_kind, epoch, step, summary)
            return
        logger.info(
            "%s epoch %d step %d: %s val=%.5f",
            self.bundle.model_kind,
            epoch,
            step,
            summary,
            self.validation_loss(validation),
        )
