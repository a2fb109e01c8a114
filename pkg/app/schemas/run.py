"""
Run configuration shared by the CLI, the HTTP jobs endpoint and the workers.

Precedence when resolving a run: Settings defaults, then the ``--config``
JSON document, then explicit command-line flags.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import Settings
from app.schemas.dataset import GtPose
from app.schemas.training import ModelKind, PatchDiscriminatorConfig, TrainConfig, UNetConfig

# epochs, batch size, lr, decay start epoch
_FULL_SCALE_TRAINING: dict[str, tuple[int, int, float, int]] = {
    "unet": (50, 32, 1e-4, 50),
    "pix2pix_smoke": (35, 6, 2e-4, 20),
    "cyclegan_smoke": (30, 64, 2e-4, 20),
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(ge=0)
    count: int = Field(default=100, ge=0)
    width: int = Field(default=275, ge=64)
    height: int = Field(default=400, ge=64)
    out: Path = Path("out")
    textures: Path | None = None
    manifest: Path | None = None
    checkpoint: Path | None = None
    alpha: float = Field(default=0.45, ge=0.0, le=1.0)
    gt_pose: GtPose = "aligned"
    allow_procedural_fallback: bool = True
    procedural_texture_count: int = Field(default=16, ge=1)
    workers: int = Field(default=1, ge=1)
    train: TrainConfig = Field(default_factory=TrainConfig)
    unet: UNetConfig = Field(default_factory=UNetConfig)
    discriminator: PatchDiscriminatorConfig = Field(default_factory=PatchDiscriminatorConfig)
    cycle_weight: float = Field(default=10.0, ge=0.0)
    write_strips: bool = False
    pred: Path | None = None
    truth: Path | None = None
    full_scale: bool = False

    @classmethod
    def defaults(
        cls,
        settings: Settings,
        seed: int,
        model_kind: ModelKind = "unet",
        full_scale: bool = False,
    ) -> dict[str, Any]:
        """Default field values as a plain dict, ready to be overlaid."""
        train: dict[str, Any] = {
            "model_kind": model_kind,
            "epochs": settings.train_epochs,
            "steps": settings.train_steps,
            "batch_size": settings.train_batch_size,
            "lr": settings.train_lr,
            "decay_start_epoch": settings.train_epochs,
            "input_size": settings.train_input_size,
            "seed": seed,
            "l1_weight": settings.pix2pix_l1_weight,
        }
        if model_kind != "unet":
            train.update(beta1=0.5, beta2=0.999)
        unet = {"depth": settings.unet_depth, "base_channels": settings.unet_base_channels}
        count = settings.dataset_count

        if full_scale:
            epochs, batch_size, lr, decay_start = _FULL_SCALE_TRAINING[model_kind]
            train.update(
                epochs=epochs,
                steps=None,
                batch_size=batch_size,
                lr=lr,
                decay_start_epoch=decay_start,
                input_size=256,
            )
            unet = {"depth": 4, "base_channels": 64}
            count = settings.full_scale_dataset_count

        return {
            "seed": seed,
            "count": count,
            "width": settings.image_width,
            "height": settings.image_height,
            "alpha": settings.blend_alpha,
            "gt_pose": settings.gt_pose,
            "allow_procedural_fallback": settings.allow_procedural_fallback,
            "procedural_texture_count": settings.procedural_texture_count,
            "workers": settings.generate_workers,
            "train": train,
            "unet": unet,
            "discriminator": {
                "layers": settings.disc_layers,
                "base_channels": settings.disc_base_channels,
            },
            "cycle_weight": settings.cycle_weight,
            "full_scale": full_scale,
        }

    @classmethod
    def resolve(
        cls,
        settings: Settings,
        file_data: dict[str, Any] | None = None,
        overrides: dict[str, Any] | None = None,
    ) -> "RunConfig":
        layered: dict[str, Any] = {}
        for source in (file_data or {}, overrides or {}):
            _deep_update(layered, {k: v for k, v in source.items() if v is not None})

        if "seed" not in layered:
            raise ValueError("A seed is required (--seed or 'seed' in the config file)")
        model_kind = layered.get("train", {}).get("model_kind", "unet")
        base = cls.defaults(
            settings,
            seed=int(layered["seed"]),
            model_kind=model_kind,
            full_scale=bool(layered.get("full_scale", False)),
        )
        base["train"]["seed"] = int(layered["seed"])
        _deep_update(base, layered)
        return cls.model_validate(base)


def _deep_update(target: dict[str, Any], source: dict[str, Any]) -> None:
    for key, value in source.items():
        if isinstance(value, dict) and isinstance(target.get(key), dict):
            _deep_update(target[key], value)
        else:
            target[key] = value
