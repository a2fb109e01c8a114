"""Checkpoint evaluation on the test split and direct image-pair scoring."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from app.core.config import get_settings
from app.schemas.metrics import MetricConfig, MetricsReport
from app.schemas.run import RunConfig
from app.services.checkpoint_service import CheckpointError, load_checkpoint
from app.services.image_io_service import GrayImage, read_image, write_image
from app.services.manifest_service import read_manifest, resolve_manifest_path
from app.services.metrics_service import MetricsError, evaluate_pairs, merge_reports
from app.training.data import TrainingConfigError, center_batch, load_split
from app.training.trainers import TRAINERS

logger = logging.getLogger(__name__)

REPORT_NAME = "report.tsv"
STRIPS_DIR = "strips"
BASELINE_NAME = "identity_baseline"


def metric_config() -> MetricConfig:
    settings = get_settings()
    return MetricConfig(
        ssim_window=settings.ssim_window,
        k1=settings.ssim_k1,
        k2=settings.ssim_k2,
        mse_floor=settings.psnr_mse_floor,
    )


def comparison_strip(noisy: GrayImage, truth: GrayImage, output: GrayImage) -> GrayImage:
    """[noisy | ground truth | model output] side by side."""
    return np.concatenate([noisy, truth, output], axis=1)


def write_report(out: Path, report: MetricsReport) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / REPORT_NAME
    path.write_text(report.to_tsv(), encoding="utf-8")
    logger.info("Report written to %s\n%s", path, report.render_table())
    return path


def cmd_eval(cfg: RunConfig, manifest_path: Path | None = None, checkpoint_path: Path | None = None) -> MetricsReport:
    """
    Score a trained model on center crops of the test split.

    The report has two rows: the model (named by its kind) and the
    identity baseline, i.e. the unprocessed noisy input against ground truth.
    """
    source = manifest_path or cfg.manifest
    checkpoint = checkpoint_path or cfg.checkpoint
    if source is None or checkpoint is None:
        raise TrainingConfigError("Evaluation needs both a manifest and a checkpoint")
    path = resolve_manifest_path(Path(source))
    manifest = read_manifest(path)

    bundle, params = load_checkpoint(Path(checkpoint))
    trainer_cls = TRAINERS[bundle.model_kind]
    try:
        trainer = trainer_cls(bundle, params)
    except TrainingConfigError as exc:
        raise CheckpointError(f"Checkpoint does not match its {bundle.model_kind} config: {exc}") from exc

    test = load_split(manifest, path.parent, "test")
    if not len(test):
        raise MetricsError(f"Manifest {path} has an empty test split")
    size = bundle.train.input_size
    for item_id, image in zip(test.ids, test.noisy):
        if image.shape[0] < size or image.shape[1] < size:
            raise CheckpointError(
                f"Checkpoint input size {size} exceeds test image {item_id} ({image.shape[1]}x{image.shape[0]})"
            )

    batch = center_batch(test, size)
    outputs = trainer.reconstruct(batch.noisy).astype(np.float64)
    noisy = [image[0].astype(np.float64) for image in batch.noisy]
    truth = [image[0].astype(np.float64) for image in batch.clean]
    predicted = [np.clip(image[0], 0.0, 1.0) for image in outputs]

    settings = get_settings()
    metrics_cfg = metric_config()
    report = merge_reports(
        evaluate_pairs(predicted, truth, metrics_cfg, bundle.model_kind, workers=settings.eval_workers),
        evaluate_pairs(noisy, truth, metrics_cfg, BASELINE_NAME, workers=settings.eval_workers),
    )

    out = Path(cfg.out)
    write_report(out, report)
    if cfg.write_strips:
        strips = out / STRIPS_DIR
        strips.mkdir(parents=True, exist_ok=True)
        for item_id, n, t, p in zip(test.ids, noisy, truth, predicted):
            write_image(strips / f"{item_id}_strip.pgm", comparison_strip(n, t, p))
        logger.info("Wrote %d comparison strips to %s", len(test), strips)
    return report


def _pair_paths(pred: Path, truth: Path) -> list[tuple[Path, Path]]:
    if pred.is_dir() != truth.is_dir():
        raise MetricsError("--pred and --truth must both be files or both be directories")
    if not pred.is_dir():
        return [(pred, truth)]
    suffixes = {".pgm", ".ppm"}
    names = sorted(p.name for p in pred.iterdir() if p.suffix.lower() in suffixes)
    missing = [name for name in names if not (truth / name).is_file()]
    if missing:
        raise MetricsError(f"No ground truth for {len(missing)} prediction(s), e.g. {missing[0]}")
    if not names:
        raise MetricsError(f"No PGM/PPM images found in {pred}")
    return [(pred / name, truth / name) for name in names]


def cmd_metrics(cfg: RunConfig, model_name: str = "model") -> MetricsReport:
    """Score prediction images against ground truth images paired by file name."""
    if cfg.pred is None or cfg.truth is None:
        raise MetricsError("Both --pred and --truth are required")
    pairs = _pair_paths(Path(cfg.pred), Path(cfg.truth))
    report = evaluate_pairs(
        [read_image(p) for p, _ in pairs],
        [read_image(t) for _, t in pairs],
        metric_config(),
        model_name,
        workers=get_settings().eval_workers,
    )
    write_report(Path(cfg.out), report)
    return report
