"""Concrete trainers: U-Net (BCE), pix2pix and cycle-consistent GAN smoke loops."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from app.neural.losses import (
    bce_loss,
    cycle_consistency_loss,
    discriminator_loss,
    gan_value,
    generator_loss,
    l1_loss,
)
from app.neural.models import patch_discriminator_forward, unet_forward
from app.neural.ops import concat_channels, sigmoid
from app.neural.tensor import Tensor
from app.schemas.training import ModelBundleConfig, ModelKind, PatchDiscriminatorConfig
from app.training.base import BaseTrainer, NetworkConfig
from app.training.data import TrainingConfigError
from app.training.state import Batch

EVAL_CHUNK = 8


def _chunked(noisy: np.ndarray, forward: Callable[[Tensor], Tensor]) -> np.ndarray:
    outputs = [forward(Tensor(noisy[start : start + EVAL_CHUNK])).data for start in range(0, len(noisy), EVAL_CHUNK)]
    return np.concatenate(outputs, axis=0) if outputs else np.zeros_like(noisy)


class UNetTrainer(BaseTrainer):
    """U-Net regressing clean prints from noisy ones under binary cross entropy."""

    @property
    def loss_names(self) -> list[str]:
        return ["bce"]

    @classmethod
    def networks(cls, bundle: ModelBundleConfig) -> dict[str, NetworkConfig]:
        return {"generator": bundle.unet}

    def optimizer_groups(self) -> dict[str, tuple[str, ...]]:
        return {"generator": ("generator",)}

    def _generate(self, noisy: Tensor) -> Tensor:
        return unet_forward(self.bundle.unet, self.net("generator"), noisy)

    def evaluate(self, batch: Batch) -> dict[str, float]:
        return {"bce": bce_loss(self._generate(Tensor(batch.noisy)), batch.clean).item()}

    def train_step(self, batch: Batch, lr: float) -> dict[str, float]:
        self.zero_grad()
        loss = bce_loss(self._generate(Tensor(batch.noisy)), batch.clean)
        loss.backward()
        self.optimizers["generator"].step(lr)
        return {"bce": loss.item()}

    def reconstruct(self, noisy: np.ndarray) -> np.ndarray:
        return _chunked(noisy, self._generate)

    def validation_loss(self, batch: Batch) -> float:
        return self.evaluate(batch)["bce"]


class Pix2PixTrainer(BaseTrainer):
    """
    Conditional GAN: the generator maps a noisy print to a clean candidate and
    the patch discriminator judges (noisy, candidate) channel pairs. An L1
    term against the ground truth is added to the generator objective.
    """

    @property
    def loss_names(self) -> list[str]:
        return ["d_loss", "value", "g_adv", "g_l1"]

    @classmethod
    def networks(cls, bundle: ModelBundleConfig) -> dict[str, NetworkConfig]:
        if bundle.discriminator is None:
            raise TrainingConfigError("pix2pix_smoke needs a discriminator config")
        return {"generator": bundle.unet, "disc": bundle.discriminator}

    def optimizer_groups(self) -> dict[str, tuple[str, ...]]:
        return {"generator": ("generator",), "disc": ("disc",)}

    @property
    def disc_cfg(self) -> PatchDiscriminatorConfig:
        assert self.bundle.discriminator is not None
        return self.bundle.discriminator

    def _generate(self, noisy: Tensor) -> Tensor:
        return unet_forward(self.bundle.unet, self.net("generator"), noisy)

    def _judge(self, noisy: Tensor, candidate: Tensor) -> Tensor:
        scores = patch_discriminator_forward(self.disc_cfg, self.net("disc"), concat_channels([noisy, candidate]))
        return sigmoid(scores)

    def _losses(self, batch: Batch) -> tuple[Tensor, Tensor, Tensor, Tensor, Tensor]:
        noisy, clean = Tensor(batch.noisy), Tensor(batch.clean)
        fake = self._generate(noisy)
        d_real = self._judge(noisy, clean)
        d_fake_detached = self._judge(noisy, fake.detach())
        value = gan_value(d_real, d_fake_detached)
        d_loss = discriminator_loss(d_real, d_fake_detached)
        g_adv = generator_loss(self._judge(noisy, fake), self.train_cfg.generator_objective)
        g_l1 = l1_loss(fake, clean)
        return d_loss, value, g_adv, g_l1, fake

    def evaluate(self, batch: Batch) -> dict[str, float]:
        d_loss, value, g_adv, g_l1, _ = self._losses(batch)
        return {"d_loss": d_loss.item(), "value": value.item(), "g_adv": g_adv.item(), "g_l1": g_l1.item()}

    def train_step(self, batch: Batch, lr: float) -> dict[str, float]:
        self.zero_grad()
        d_loss, value, g_adv, g_l1, _ = self._losses(batch)
        d_loss.backward()
        self.optimizers["disc"].step(lr)

        # fresh graph so the generator sees the updated discriminator
        self.zero_grad()
        noisy, clean = Tensor(batch.noisy), Tensor(batch.clean)
        fake = self._generate(noisy)
        adversarial = generator_loss(self._judge(noisy, fake), self.train_cfg.generator_objective)
        total = adversarial + l1_loss(fake, clean) * self.train_cfg.l1_weight
        total.backward()
        self.optimizers["generator"].step(lr)
        return {"d_loss": d_loss.item(), "value": value.item(), "g_adv": g_adv.item(), "g_l1": g_l1.item()}

    def reconstruct(self, noisy: np.ndarray) -> np.ndarray:
        return _chunked(noisy, self._generate)

    def validation_loss(self, batch: Batch) -> float:
        return l1_loss(self._generate(Tensor(batch.noisy)), batch.clean).item()


class CycleGanTrainer(BaseTrainer):
    """
    Two generators (noisy to clean and back) and one discriminator per
    domain. Clean targets are shuffled within the batch so the pairing is
    never used; the cycle term ties the two mappings together.
    """

    def __init__(self, bundle: ModelBundleConfig, params: dict[str, np.ndarray]) -> None:
        super().__init__(bundle, params)
        self.unpair_rng = np.random.default_rng(np.random.SeedSequence(bundle.train.seed, spawn_key=(2,)))

    @property
    def loss_names(self) -> list[str]:
        return ["d_x", "d_y", "g_adv", "cycle"]

    @classmethod
    def networks(cls, bundle: ModelBundleConfig) -> dict[str, NetworkConfig]:
        if bundle.cycle is None:
            raise TrainingConfigError("cyclegan_smoke needs a cycle config")
        cycle = bundle.cycle
        return {"g_xy": cycle.generator_xy, "g_yx": cycle.generator_yx, "d_x": cycle.disc_x, "d_y": cycle.disc_y}

    def optimizer_groups(self) -> dict[str, tuple[str, ...]]:
        return {"generators": ("g_xy", "g_yx"), "discriminators": ("d_x", "d_y")}

    def _map(self, prefix: str, x: Tensor) -> Tensor:
        assert self.bundle.cycle is not None
        cfg = self.bundle.cycle.generator_xy if prefix == "g_xy" else self.bundle.cycle.generator_yx
        return unet_forward(cfg, self.net(prefix), x)

    def _judge(self, prefix: str, x: Tensor) -> Tensor:
        assert self.bundle.cycle is not None
        cfg = self.bundle.cycle.disc_x if prefix == "d_x" else self.bundle.cycle.disc_y
        return sigmoid(patch_discriminator_forward(cfg, self.net(prefix), x))

    def _generator_objective(self, x: Tensor, y: Tensor) -> tuple[Tensor, Tensor, Tensor, Tensor]:
        fake_y = self._map("g_xy", x)
        fake_x = self._map("g_yx", y)
        objective = self.train_cfg.generator_objective
        adversarial = generator_loss(self._judge("d_y", fake_y), objective) + generator_loss(
            self._judge("d_x", fake_x), objective
        )
        cycle = cycle_consistency_loss(x, self._map("g_yx", fake_y)) + cycle_consistency_loss(
            y, self._map("g_xy", fake_x)
        )
        return adversarial, cycle, fake_x, fake_y

    def _discriminator_losses(self, x: Tensor, y: Tensor, fake_x: Tensor, fake_y: Tensor) -> tuple[Tensor, Tensor]:
        d_x = discriminator_loss(self._judge("d_x", x), self._judge("d_x", fake_x.detach()))
        d_y = discriminator_loss(self._judge("d_y", y), self._judge("d_y", fake_y.detach()))
        return d_x, d_y

    def _domains(self, batch: Batch) -> tuple[Tensor, Tensor]:
        order = self.unpair_rng.permutation(len(batch.clean))
        return Tensor(batch.noisy), Tensor(batch.clean[order])

    def evaluate(self, batch: Batch) -> dict[str, float]:
        x, y = Tensor(batch.noisy), Tensor(batch.clean)
        adversarial, cycle, fake_x, fake_y = self._generator_objective(x, y)
        d_x, d_y = self._discriminator_losses(x, y, fake_x, fake_y)
        return {"d_x": d_x.item(), "d_y": d_y.item(), "g_adv": adversarial.item(), "cycle": cycle.item()}

    def train_step(self, batch: Batch, lr: float) -> dict[str, float]:
        x, y = self._domains(batch)
        self.zero_grad()
        adversarial, cycle, fake_x, fake_y = self._generator_objective(x, y)
        (adversarial + cycle * self.bundle.cycle.cycle_weight).backward()  # type: ignore[union-attr]
        self.optimizers["generators"].step(lr)

        self.zero_grad()
        d_x, d_y = self._discriminator_losses(x, y, fake_x, fake_y)
        (d_x + d_y).backward()
        self.optimizers["discriminators"].step(lr)
        return {"d_x": d_x.item(), "d_y": d_y.item(), "g_adv": adversarial.item(), "cycle": cycle.item()}

    def reconstruct(self, noisy: np.ndarray) -> np.ndarray:
        return _chunked(noisy, lambda x: self._map("g_xy", x))

    def validation_loss(self, batch: Batch) -> float:
        return l1_loss(self._map("g_xy", Tensor(batch.noisy)), batch.clean).item()


TRAINERS: dict[ModelKind, type[BaseTrainer]] = {
    "unet": UNetTrainer,
    "pix2pix_smoke": Pix2PixTrainer,
    "cyclegan_smoke": CycleGanTrainer,
}


def trainer_for(bundle: ModelBundleConfig, params: dict[str, np.ndarray]) -> BaseTrainer:
    try:
        trainer_cls = TRAINERS[bundle.model_kind]
    except KeyError as exc:
        raise TrainingConfigError(f"Unknown model kind '{bundle.model_kind}'") from exc
    return trainer_cls(bundle, params)
