"""Training orchestration: manifest in, checkpoint and loss history out."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from app.schemas.run import RunConfig
from app.schemas.training import CycleGanConfig, ModelBundleConfig
from app.services.checkpoint_service import save_checkpoint
from app.services.manifest_service import read_manifest, resolve_manifest_path
from app.training.data import BatchSampler, TrainingConfigError, center_batch, load_split, require_crop_fits
from app.training.state import TrainingResult
from app.training.trainers import TRAINERS

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.fpfn"
HISTORY_NAME = "history.tsv"


def build_bundle(cfg: RunConfig) -> ModelBundleConfig:
    """Network configs for the requested model kind, with channel counts fixed by the kind."""
    kind = cfg.train.model_kind
    unet = cfg.unet.model_copy(update={"in_channels": 1, "out_channels": 1})
    if kind == "unet":
        return ModelBundleConfig(model_kind=kind, unet=unet, train=cfg.train)
    if kind == "pix2pix_smoke":
        # the discriminator sees (noisy, candidate) stacked as two channels
        disc = cfg.discriminator.model_copy(update={"in_channels": 2})
        return ModelBundleConfig(model_kind=kind, unet=unet, discriminator=disc, train=cfg.train)
    if kind == "cyclegan_smoke":
        disc = cfg.discriminator.model_copy(update={"in_channels": 1})
        cycle = CycleGanConfig(
            generator_xy=unet,
            generator_yx=unet,
            disc_x=disc,
            disc_y=disc,
            cycle_weight=cfg.cycle_weight,
        )
        return ModelBundleConfig(model_kind=kind, unet=unet, cycle=cycle, train=cfg.train)
    raise TrainingConfigError(f"Unknown model kind '{kind}'")


def _train_seed(cfg: RunConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.train.seed, spawn_key=(stream,)))


def cmd_train(cfg: RunConfig, manifest_path: Path | None = None) -> TrainingResult:
    """
    Train ``cfg.train.model_kind`` on the train split of a generated dataset.

    All configuration problems (input size vs network depth, empty split,
    images smaller than the crop) are raised before any parameter is
    initialised.
    """
    source = manifest_path or cfg.manifest
    if source is None:
        raise TrainingConfigError("A manifest (or dataset directory) is required for training")
    path = resolve_manifest_path(Path(source))
    manifest = read_manifest(path)
    root = path.parent

    bundle = build_bundle(cfg)
    trainer_cls = TRAINERS[bundle.model_kind]
    trainer_cls.check_input_size(bundle)
    if not manifest.split("train"):
        raise TrainingConfigError(f"Manifest {path} has an empty train split")

    size = bundle.train.input_size
    train = load_split(manifest, root, "train")
    require_crop_fits(train, size, "train")
    val = load_split(manifest, root, "val")
    validation = None
    if len(val):
        require_crop_fits(val, size, "val")
        validation = center_batch(val, size)
    else:
        logger.warning("Validation split is empty; skipping validation tracking")

    trainer = trainer_cls(bundle, trainer_cls.initial_params(bundle, _train_seed(cfg, 0)))
    sampler = BatchSampler(train, size, bundle.train.batch_size, _train_seed(cfg, 1))
    logger.info(
        "Training %s on %d pairs: input=%d batch=%d lr=%g",
        bundle.model_kind,
        len(train),
        size,
        bundle.train.batch_size,
        bundle.train.lr,
    )
    history = trainer.fit(sampler, validation)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    history_path = out / HISTORY_NAME
    history_path.write_text(history.to_tsv(), encoding="utf-8")
    checkpoint_path = Path(cfg.checkpoint) if cfg.checkpoint is not None else out / CHECKPOINT_NAME
    params = trainer.arrays()
    save_checkpoint(checkpoint_path, bundle, params)
    logger.info("Training finished: %d history rows written to %s", len(history.rows), history_path)
    return TrainingResult(
        checkpoint_path=checkpoint_path,
        history_path=history_path,
        history=history,
        params=params,
    )
