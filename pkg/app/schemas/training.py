"""Network and training configuration models (also stored in checkpoints)."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

ModelKind = Literal["unet", "pix2pix_smoke", "cyclegan_smoke"]
InitScheme = Literal["gaussian", "he"]
GeneratorObjective = Literal["minimax", "non_saturating"]


class UNetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    in_channels: int = Field(default=1, ge=1)
    out_channels: int = Field(default=1, ge=1)
    depth: int = Field(default=3, ge=1)
    base_channels: int = Field(default=8, ge=1)
    final_activation: Literal["sigmoid"] = "sigmoid"


class PatchDiscriminatorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    in_channels: int = Field(default=1, ge=1)
    layers: int = Field(default=3, ge=1)
    base_channels: int = Field(default=8, ge=1)


class CycleGanConfig(BaseModel):
    """G: X -> Y (noisy to clean), F: Y -> X, with D_X and D_Y."""

    model_config = ConfigDict(extra="forbid")

    generator_xy: UNetConfig = Field(default_factory=UNetConfig)
    generator_yx: UNetConfig = Field(default_factory=UNetConfig)
    disc_x: PatchDiscriminatorConfig = Field(default_factory=PatchDiscriminatorConfig)
    disc_y: PatchDiscriminatorConfig = Field(default_factory=PatchDiscriminatorConfig)
    cycle_weight: float = Field(default=10.0, ge=0.0)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model_kind: ModelKind = "unet"
    epochs: int = Field(default=30, ge=1)
    steps: int | None = Field(default=None, ge=1)
    batch_size: int = Field(default=8, ge=1)
    lr: float = Field(default=1e-4, gt=0.0)
    beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    decay_start_epoch: int = Field(default=30, ge=0)
    input_size: int = Field(default=64, ge=1)
    seed: int = 1
    init: InitScheme | None = None
    init_std: float = Field(default=0.02, gt=0.0)
    l1_weight: float = Field(default=100.0, ge=0.0)
    generator_objective: GeneratorObjective = "minimax"

    @model_validator(mode="after")
    def check_schedule(self) -> "TrainConfig":
        if self.decay_start_epoch > self.epochs:
            raise ValueError("decay_start_epoch must not exceed epochs")
        return self

    def resolved_init(self) -> InitScheme:
        if self.init is not None:
            return self.init
        return "he" if self.model_kind == "unet" else "gaussian"


class ModelBundleConfig(BaseModel):
    """Everything needed to rebuild the networks of one trained run."""

    model_config = ConfigDict(extra="forbid")

    model_kind: ModelKind
    unet: UNetConfig = Field(default_factory=UNetConfig)
    discriminator: PatchDiscriminatorConfig | None = None
    cycle: CycleGanConfig | None = None
    train: TrainConfig = Field(default_factory=TrainConfig)
