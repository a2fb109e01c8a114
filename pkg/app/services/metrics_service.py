"""
MSE, PSNR and SSIM on [0, 1] grayscale images, plus report aggregation.

SSIM is scikit-image's structural similarity with a uniform square window and
population statistics, averaged over valid window positions. `window_stats`
exposes the per-window statistics behind it.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from skimage.metrics import structural_similarity

from app.schemas.metrics import MetricConfig, MetricsReport, MetricsRow, PairMetrics
from app.services.image_io_service import GrayImage, InvalidImageError, require_same_shape

logger = logging.getLogger(__name__)


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class SsimWindowStats:
    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma_x2: np.ndarray
    sigma_y2: np.ndarray
    sigma_xy: np.ndarray


def _as_pair(a: GrayImage, b: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    require_same_shape(x, y)
    return x, y


def mse(a: GrayImage, b: GrayImage) -> float:
    x, y = _as_pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr_from_mse(value: float, cfg: MetricConfig | None = None) -> float:
    cfg = cfg or MetricConfig()
    return 20.0 * math.log10(cfg.max_value / math.sqrt(max(value, cfg.mse_floor)))


def psnr(a: GrayImage, b: GrayImage, cfg: MetricConfig | None = None) -> float:
    return psnr_from_mse(mse(a, b), cfg)


def window_stats(x: np.ndarray, y: np.ndarray, window: int) -> SsimWindowStats:
    axes = (-2, -1)
    shape = (window, window)
    mu_x = sliding_window_view(x, shape).mean(axis=axes)
    mu_y = sliding_window_view(y, shape).mean(axis=axes)
    sigma_x2 = np.maximum(sliding_window_view(x * x, shape).mean(axis=axes) - mu_x * mu_x, 0.0)
    sigma_y2 = np.maximum(sliding_window_view(y * y, shape).mean(axis=axes) - mu_y * mu_y, 0.0)
    sigma_xy = sliding_window_view(x * y, shape).mean(axis=axes) - mu_x * mu_y
    # cancellation can push the raw covariance past Cauchy-Schwarz
    bound = np.sqrt(sigma_x2 * sigma_y2)
    sigma_xy = np.clip(sigma_xy, -bound, bound)
    return SsimWindowStats(mu_x, mu_y, sigma_x2, sigma_y2, sigma_xy)


def ssim_index(stats: SsimWindowStats, cfg: MetricConfig) -> np.ndarray:
    c1 = (cfg.k1 * cfg.max_value) ** 2
    c2 = (cfg.k2 * cfg.max_value) ** 2
    numerator = (2 * stats.mu_x * stats.mu_y + c1) * (2 * stats.sigma_xy + c2)
    denominator = (stats.mu_x**2 + stats.mu_y**2 + c1) * (stats.sigma_x2 + stats.sigma_y2 + c2)
    return numerator / denominator


def ssim(a: GrayImage, b: GrayImage, cfg: MetricConfig | None = None) -> float:
    cfg = cfg or MetricConfig()
    x, y = _as_pair(a, b)
    if x.ndim != 2 or min(x.shape) < cfg.ssim_window:
        raise InvalidImageError(
            f"SSIM needs 2-D images of at least {cfg.ssim_window}x{cfg.ssim_window}, got {x.shape}"
        )
    # uniform window, population statistics, mean over valid window centres
    score = structural_similarity(
        x,
        y,
        win_size=cfg.ssim_window,
        gaussian_weights=False,
        use_sample_covariance=False,
        data_range=cfg.max_value,
        K1=cfg.k1,
        K2=cfg.k2,
    )
    return min(1.0, max(-1.0, float(score)))


def score_pair(pred: GrayImage, truth: GrayImage, cfg: MetricConfig | None = None) -> PairMetrics:
    cfg = cfg or MetricConfig()
    error = mse(pred, truth)
    return PairMetrics(mse=error, psnr_db=psnr_from_mse(error, cfg), ssim=ssim(pred, truth, cfg))


def aggregate(model_name: str, pairs: Sequence[PairMetrics]) -> MetricsRow:
    if not pairs:
        raise MetricsError(f"No pairs to aggregate for '{model_name}'")
    count = len(pairs)
    return MetricsRow(
        model_name=model_name,
        mean_mse=math.fsum(p.mse for p in pairs) / count,
        mean_psnr_db=math.fsum(p.psnr_db for p in pairs) / count,
        mean_ssim=math.fsum(p.ssim for p in pairs) / count,
    )


def evaluate_pairs(
    pred: Sequence[GrayImage],
    truth: Sequence[GrayImage],
    cfg: MetricConfig | None = None,
    model_name: str = "model",
    workers: int = 1,
) -> MetricsReport:
    """Per-pair metrics then arithmetic means; PSNR is averaged per image."""
    if len(pred) != len(truth):
        raise MetricsError(f"Length mismatch: {len(pred)} predictions vs {len(truth)} ground truths")
    cfg = cfg or MetricConfig()
    if workers > 1:
        # map preserves index order, so the reduction below is order-stable
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(lambda pair: score_pair(pair[0], pair[1], cfg), zip(pred, truth)))
    else:
        pairs = [score_pair(p, t, cfg) for p, t in zip(pred, truth)]
    row = aggregate(model_name, pairs)
    logger.info(
        "Scored %d pairs for %s: mse=%.4f psnr=%.4f ssim=%.4f",
        len(pairs),
        model_name,
        row.mean_mse,
        row.mean_psnr_db,
        row.mean_ssim,
    )
    return MetricsReport(rows=[row], per_pair={model_name: pairs})


def merge_reports(*reports: MetricsReport) -> MetricsReport:
    rows: list[MetricsRow] = []
    per_pair: dict[str, list[PairMetrics]] = {}
    for report in reports:
        rows.extend(report.rows)
        per_pair.update(report.per_pair or {})
    return MetricsReport(rows=rows, per_pair=per_pair or None)
