import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from app.schemas.metrics import TSV_HEADER, MetricConfig, MetricsReport, MetricsRow
from app.services.image_io_service import InvalidImageError
from app.services.metrics_service import (
    MetricsError,
    evaluate_pairs,
    mse,
    psnr,
    psnr_from_mse,
    ssim,
    ssim_index,
    window_stats,
)

images = arrays(np.float64, (12, 13), elements=st.floats(min_value=0.0, max_value=1.0))


def direct_ssim(x: np.ndarray, y: np.ndarray, cfg: MetricConfig) -> float:
    c1 = (cfg.k1 * cfg.max_value) ** 2
    c2 = (cfg.k2 * cfg.max_value) ** 2
    mx, my = x.mean(), y.mean()
    vx, vy = x.var(), y.var()
    cov = np.mean((x - mx) * (y - my))
    return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))


def test_mse_examples():
    a = np.array([[0.0, 0.5], [1.0, 0.25]])
    b = np.array([[0.1, 0.5], [0.9, 0.25]])

    assert mse(a, a) == 0.0
    assert mse(np.zeros((3, 3)), np.ones((3, 3))) == 1.0
    assert mse(a, b) == pytest.approx(0.005, abs=1e-15)


def test_mse_rejects_mismatched_shapes():
    with pytest.raises(InvalidImageError):
        mse(np.zeros((2, 2)), np.zeros((2, 3)))


def test_psnr_examples():
    assert psnr_from_mse(0.01) == pytest.approx(20.0, abs=1e-12)
    assert psnr_from_mse(0.0466) == pytest.approx(13.316, abs=1e-3)
    assert abs(psnr_from_mse(0.0466) - 13.4016) < 0.1


def test_psnr_of_identical_images_is_capped():
    image = np.random.default_rng(1).random((16, 16))

    assert psnr(image, image) == pytest.approx(120.0, abs=1e-9)


def test_ssim_of_identical_images_is_exactly_one():
    rng = np.random.default_rng(3)
    for _ in range(20):
        image = rng.random((24, 31))
        assert ssim(image, image) == 1.0


def test_ssim_of_constant_images():
    a = np.full((20, 20), 0.3)
    b = np.full((20, 20), 0.7)

    expected = (0.42 + 1e-4) / (0.58 + 1e-4)
    assert ssim(a, b) == pytest.approx(expected, abs=1e-12)
    assert ssim(a, b) == pytest.approx(0.72419, abs=1e-5)


def test_ssim_single_window_matches_direct_formula():
    rng = np.random.default_rng(11)
    cfg = MetricConfig()
    for _ in range(25):
        x, y = rng.random((11, 11)), rng.random((11, 11))
        assert abs(ssim(x, y, cfg) - direct_ssim(x, y, cfg)) < 1e-12


def test_ssim_rejects_images_smaller_than_window():
    with pytest.raises(InvalidImageError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_metric_config_requires_odd_window():
    with pytest.raises(ValueError):
        MetricConfig(ssim_window=8)


def test_formula_fidelity_on_a_thousand_pairs():
    rng = np.random.default_rng(2025)
    cfg = MetricConfig()
    for _ in range(1000):
        x, y = rng.random((16, 16)), rng.random((16, 16))
        error = mse(x, y)
        assert psnr(x, y, cfg) == pytest.approx(20 * math.log10(1.0 / math.sqrt(error)), abs=1e-9)
        score = ssim(x, y, cfg)
        assert -1.0 <= score <= 1.0
        assert ssim(x, x, cfg) == 1.0


@settings(max_examples=50, deadline=None)
@given(images, images)
def test_metrics_are_symmetric_and_bounded(a, b):
    assert mse(a, b) == mse(b, a)
    assert mse(a, b) >= 0.0
    assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12
    assert -1.0 <= ssim(a, b) <= 1.0


@settings(max_examples=50, deadline=None)
@given(images, images)
def test_window_covariance_respects_cauchy_schwarz(a, b):
    stats = window_stats(a, b, 11)

    assert np.all(stats.sigma_x2 >= 0.0)
    assert np.all(stats.sigma_y2 >= 0.0)
    assert np.all(np.abs(stats.sigma_xy) <= np.sqrt(stats.sigma_x2 * stats.sigma_y2) + 1e-9)


def test_window_statistics_reproduce_ssim():
    rng = np.random.default_rng(17)
    cfg = MetricConfig()
    for _ in range(20):
        x, y = rng.random((24, 31)), rng.random((24, 31))
        per_window = ssim_index(window_stats(x, y, cfg.ssim_window), cfg)

        assert per_window.shape == (14, 21)
        assert abs(float(np.mean(per_window)) - ssim(x, y, cfg)) < 1e-12


def test_noise_degrades_metrics_monotonically():
    clean = np.clip(np.random.default_rng(0).random((48, 48)) * 0.6 + 0.2, 0.0, 1.0)
    mean_mse, mean_ssim = [], []
    for sigma in (0.02, 0.05, 0.1, 0.2):
        scores = []
        for seed in range(10):
            noisy = np.clip(clean + np.random.default_rng(seed).normal(0.0, sigma, clean.shape), 0.0, 1.0)
            scores.append((mse(clean, noisy), ssim(clean, noisy)))
        mean_mse.append(np.mean([s[0] for s in scores]))
        mean_ssim.append(np.mean([s[1] for s in scores]))

    assert all(b > a for a, b in zip(mean_mse, mean_mse[1:]))
    assert all(b < a for a, b in zip(mean_ssim, mean_ssim[1:]))


def test_evaluate_pairs_identity_row():
    image = np.random.default_rng(2).random((16, 16))

    report = evaluate_pairs([image], [image], model_name="self")

    row = report.row("self")
    assert row.mean_mse == 0.0
    assert row.mean_psnr_db == pytest.approx(120.0)
    assert row.mean_ssim == 1.0


def test_evaluate_pairs_averages_per_pair_values():
    truth = np.zeros((16, 16))
    pred = [np.full((16, 16), math.sqrt(0.01)), np.full((16, 16), math.sqrt(0.03))]

    report = evaluate_pairs(pred, [truth, truth], model_name="m")

    assert report.row("m").mean_mse == pytest.approx(0.02, abs=1e-15)
    assert [p.mse for p in report.per_pair["m"]] == pytest.approx([0.01, 0.03])
    expected_psnr = (psnr_from_mse(0.01) + psnr_from_mse(0.03)) / 2
    assert report.row("m").mean_psnr_db == pytest.approx(expected_psnr)


def test_evaluate_pairs_is_order_stable_with_workers():
    rng = np.random.default_rng(4)
    pred = [rng.random((20, 20)) for _ in range(6)]
    truth = [rng.random((20, 20)) for _ in range(6)]

    serial = evaluate_pairs(pred, truth, model_name="m")
    threaded = evaluate_pairs(pred, truth, model_name="m", workers=3)

    assert serial == threaded


def test_evaluate_pairs_rejects_length_mismatch():
    with pytest.raises(MetricsError):
        evaluate_pairs([np.zeros((12, 12))], [], model_name="m")


def test_report_tsv_layout_with_reference_aggregates():
    report = MetricsReport(
        rows=[
            MetricsRow(model_name="pix2pixGAN", mean_mse=0.1109, mean_psnr_db=9.6470, mean_ssim=0.4627),
            MetricsRow(model_name="cycleGAN", mean_mse=0.1362, mean_psnr_db=7.9381, mean_ssim=0.4055),
            MetricsRow(model_name="U-Net", mean_mse=0.0466, mean_psnr_db=13.4016, mean_ssim=0.7714),
        ]
    )

    lines = report.to_tsv().splitlines()

    assert lines[0] == TSV_HEADER == "model\tmse\tpsnr_db\tssim"
    assert lines[1] == "pix2pixGAN\t0.110900\t9.647000\t0.462700"
    assert lines[2] == "cycleGAN\t0.136200\t7.938100\t0.405500"
    assert lines[3] == "U-Net\t0.046600\t13.401600\t0.771400"
    assert report.to_tsv().endswith("\n")


def test_render_table_lists_every_model():
    report = MetricsReport(
        rows=[MetricsRow(model_name="unet", mean_mse=0.05, mean_psnr_db=13.0, mean_ssim=0.7)]
    )

    table = report.render_table().splitlines()

    assert table[0].startswith("Model")
    assert "PSNR" in table[0]
    assert "unet" in table[2]
    assert "13.0000" in table[2]
