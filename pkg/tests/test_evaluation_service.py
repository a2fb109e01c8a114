import numpy as np
import pytest

from app.schemas.run import RunConfig
from app.schemas.training import TrainConfig, UNetConfig
from app.services.checkpoint_service import CheckpointError, load_checkpoint, save_checkpoint
from app.services.dataset_service import generate_dataset
from app.services.evaluation_service import (
    BASELINE_NAME,
    REPORT_NAME,
    STRIPS_DIR,
    cmd_eval,
    cmd_metrics,
    comparison_strip,
)
from app.services.image_io_service import read_image, write_image
from app.services.metrics_service import MetricsError
from app.services.training_service import cmd_train
from app.training.data import TrainingConfigError


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("evaluation")
    data = root / "ds"
    generate_dataset(RunConfig(seed=5, count=10, width=64, height=64, out=data, procedural_texture_count=4))
    cfg = RunConfig(
        seed=5,
        out=root / "run",
        manifest=data,
        train=TrainConfig(steps=2, batch_size=2, input_size=32, epochs=1, decay_start_epoch=1, seed=5),
        unet=UNetConfig(depth=2, base_channels=2),
    )
    result = cmd_train(cfg)
    return data, result.checkpoint_path


def test_eval_reports_model_and_identity_baseline(trained, tmp_path):
    data, checkpoint = trained
    cfg = RunConfig(seed=0, out=tmp_path, manifest=data, checkpoint=checkpoint)

    report = cmd_eval(cfg)

    assert [row.model_name for row in report.rows] == ["unet", BASELINE_NAME]
    assert len(report.per_pair["unet"]) == 2
    lines = (tmp_path / REPORT_NAME).read_text().splitlines()
    assert lines[0] == "model\tmse\tpsnr_db\tssim"
    assert lines[1].startswith("unet\t")
    assert lines[2].startswith(f"{BASELINE_NAME}\t")
    for row in report.rows:
        assert row.mean_mse >= 0.0
        assert -1.0 <= row.mean_ssim <= 1.0


def test_eval_writes_comparison_strips(trained, tmp_path):
    data, checkpoint = trained
    cfg = RunConfig(seed=0, out=tmp_path, manifest=data, checkpoint=checkpoint, write_strips=True)

    cmd_eval(cfg)

    strips = sorted((tmp_path / STRIPS_DIR).iterdir())
    assert len(strips) == 2
    assert strips[0].name.endswith("_strip.pgm")
    assert read_image(strips[0]).shape == (32, 96)


def test_eval_is_deterministic(trained, tmp_path):
    data, checkpoint = trained

    first = cmd_eval(RunConfig(seed=0, out=tmp_path / "a", manifest=data, checkpoint=checkpoint))
    second = cmd_eval(RunConfig(seed=0, out=tmp_path / "b", manifest=data, checkpoint=checkpoint))

    assert first == second


def test_eval_requires_a_checkpoint(trained, tmp_path):
    data, _ = trained

    with pytest.raises(TrainingConfigError):
        cmd_eval(RunConfig(seed=0, out=tmp_path, manifest=data))


def test_eval_rejects_checkpoints_that_do_not_match_their_config(trained, tmp_path):
    data, checkpoint = trained
    bundle, params = load_checkpoint(checkpoint)
    params.pop("generator.head.bias")
    broken = tmp_path / "broken.fpfn"
    save_checkpoint(broken, bundle, params)

    with pytest.raises(CheckpointError, match="does not match"):
        cmd_eval(RunConfig(seed=0, out=tmp_path, manifest=data, checkpoint=broken))


def test_comparison_strip_layout():
    noisy, truth, output = np.zeros((4, 3)), np.full((4, 3), 0.5), np.ones((4, 3))

    strip = comparison_strip(noisy, truth, output)

    assert strip.shape == (4, 9)
    np.testing.assert_array_equal(strip[:, 3:6], truth)


def test_metrics_of_identical_directories(tmp_path):
    images = tmp_path / "images"
    images.mkdir()
    rng = np.random.default_rng(0)
    for name in ("a.pgm", "b.pgm"):
        write_image(images / name, rng.random((16, 16)))

    report = cmd_metrics(RunConfig(seed=0, out=tmp_path / "out", pred=images, truth=images), model_name="copy")

    row = report.row("copy")
    assert row.mean_mse == 0.0
    assert row.mean_psnr_db == pytest.approx(120.0)
    assert row.mean_ssim == 1.0
    assert (tmp_path / "out" / REPORT_NAME).is_file()


def test_metrics_needs_matching_ground_truth(tmp_path):
    pred, truth = tmp_path / "pred", tmp_path / "truth"
    pred.mkdir()
    truth.mkdir()
    write_image(pred / "a.pgm", np.zeros((16, 16)))

    with pytest.raises(MetricsError, match="No ground truth"):
        cmd_metrics(RunConfig(seed=0, out=tmp_path / "out", pred=pred, truth=truth))


def test_metrics_rejects_mixed_file_and_directory(tmp_path):
    write_image(tmp_path / "a.pgm", np.zeros((16, 16)))

    with pytest.raises(MetricsError, match="both be files"):
        cmd_metrics(RunConfig(seed=0, out=tmp_path / "out", pred=tmp_path / "a.pgm", truth=tmp_path))
