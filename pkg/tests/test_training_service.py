import numpy as np
import pytest

from app.schemas.dataset import DatasetManifest, ManifestHeader
from app.schemas.run import RunConfig
from app.schemas.training import PatchDiscriminatorConfig, TrainConfig, UNetConfig
from app.services.checkpoint_service import load_checkpoint
from app.services.dataset_service import generate_dataset
from app.services.evaluation_service import BASELINE_NAME, cmd_eval
from app.services.manifest_service import MANIFEST_NAME, read_manifest, write_manifest
from app.services.training_service import CHECKPOINT_NAME, HISTORY_NAME, build_bundle, cmd_train
from app.training.data import BatchSampler, TrainingConfigError, center_crop, load_split
from app.training.trainers import TRAINERS, trainer_for


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("train") / "ds"
    generate_dataset(
        RunConfig(seed=2, count=10, width=64, height=64, out=out, procedural_texture_count=4)
    )
    return out


def run_config(dataset_dir, out, model_kind="unet", **train) -> RunConfig:
    train_values = {
        "model_kind": model_kind,
        "steps": 3,
        "batch_size": 2,
        "input_size": 32,
        "epochs": 1,
        "decay_start_epoch": 1,
        "lr": 1e-3,
        "seed": 7,
    }
    train_values.update(train)
    return RunConfig(
        seed=7,
        out=out,
        manifest=dataset_dir,
        train=TrainConfig(**train_values),
        unet=UNetConfig(depth=2, base_channels=2),
        discriminator=PatchDiscriminatorConfig(layers=2, base_channels=2),
    )


def test_unet_training_writes_history_and_checkpoint(dataset_dir, tmp_path):
    result = cmd_train(run_config(dataset_dir, tmp_path))

    lines = (tmp_path / HISTORY_NAME).read_text().splitlines()
    assert lines[0] == "step\tepoch\tlr\tbce"
    assert len(lines) == 1 + 4
    assert [row.step for row in result.history.rows] == [0, 1, 2, 3]
    assert result.checkpoint_path == tmp_path / CHECKPOINT_NAME

    bundle, params = load_checkpoint(result.checkpoint_path)
    assert bundle.model_kind == "unet"
    assert set(params) == set(result.params)
    assert all(name.startswith("generator.") for name in params)


def test_training_is_reproducible(dataset_dir, tmp_path):
    cmd_train(run_config(dataset_dir, tmp_path / "a"))
    cmd_train(run_config(dataset_dir, tmp_path / "b"))

    assert (tmp_path / "a" / HISTORY_NAME).read_bytes() == (tmp_path / "b" / HISTORY_NAME).read_bytes()
    assert (tmp_path / "a" / CHECKPOINT_NAME).read_bytes() == (tmp_path / "b" / CHECKPOINT_NAME).read_bytes()


def test_explicit_checkpoint_path_is_used(dataset_dir, tmp_path):
    cfg = run_config(dataset_dir, tmp_path / "run")
    cfg = cfg.model_copy(update={"checkpoint": tmp_path / "ckpt" / "m.fpfn"})

    result = cmd_train(cfg)

    assert result.checkpoint_path == tmp_path / "ckpt" / "m.fpfn"
    assert result.checkpoint_path.is_file()


def test_input_size_must_match_network_depth(dataset_dir, tmp_path):
    with pytest.raises(TrainingConfigError, match="not divisible"):
        cmd_train(run_config(dataset_dir, tmp_path, input_size=30))

    assert not (tmp_path / HISTORY_NAME).exists()


def test_images_smaller_than_the_crop_are_rejected(dataset_dir, tmp_path):
    with pytest.raises(TrainingConfigError, match="smaller than input_size"):
        cmd_train(run_config(dataset_dir, tmp_path, input_size=128))


def test_empty_train_split_is_rejected(dataset_dir, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    write_manifest(empty / MANIFEST_NAME, DatasetManifest(header=ManifestHeader(alpha=0.45, counts={})))

    with pytest.raises(TrainingConfigError, match="empty train split"):
        cmd_train(run_config(empty, tmp_path / "out"))


def test_missing_manifest_is_rejected(tmp_path):
    cfg = RunConfig(seed=1, out=tmp_path)

    with pytest.raises(TrainingConfigError, match="manifest"):
        cmd_train(cfg)


@pytest.mark.parametrize(
    ("model_kind", "columns", "prefixes"),
    [
        ("pix2pix_smoke", ["d_loss", "value", "g_adv", "g_l1"], {"generator", "disc"}),
        ("cyclegan_smoke", ["d_x", "d_y", "g_adv", "cycle"], {"g_xy", "g_yx", "d_x", "d_y"}),
    ],
)
def test_gan_smoke_training(dataset_dir, tmp_path, model_kind, columns, prefixes):
    result = cmd_train(run_config(dataset_dir, tmp_path, model_kind=model_kind, lr=2e-4, beta1=0.5))

    assert result.history.loss_names == columns
    assert len(result.history.rows) == 4
    for name in columns:
        assert all(np.isfinite(result.history.column(name)))
    assert {name.split(".", 1)[0] for name in result.params} == prefixes


def test_pix2pix_discriminator_sees_two_channels(dataset_dir, tmp_path):
    bundle = build_bundle(run_config(dataset_dir, tmp_path, model_kind="pix2pix_smoke"))

    assert bundle.discriminator.in_channels == 2
    assert bundle.unet.in_channels == 1


def test_gan_models_default_to_gaussian_init(dataset_dir, tmp_path):
    bundle = build_bundle(run_config(dataset_dir, tmp_path, model_kind="cyclegan_smoke"))
    params = TRAINERS["cyclegan_smoke"].initial_params(bundle, np.random.default_rng(0))

    weights = np.concatenate([value.ravel() for name, value in params.items() if name.endswith("weight")])
    assert abs(weights.std() - 0.02) < 0.002
    assert bundle.cycle.cycle_weight == 10.0


def test_trainer_rejects_wrong_parameter_shapes(dataset_dir, tmp_path):
    bundle = build_bundle(run_config(dataset_dir, tmp_path))
    params = TRAINERS["unet"].initial_params(bundle, np.random.default_rng(0))
    params["generator.head.weight"] = np.zeros((2, 2, 1, 1), dtype=np.float32)

    with pytest.raises(TrainingConfigError, match="generator.head.weight"):
        trainer_for(bundle, params)


def test_sampler_visits_every_pair_each_epoch(dataset_dir):
    manifest = read_manifest(dataset_dir / MANIFEST_NAME)
    images = load_split(manifest, dataset_dir, "train")
    sampler = BatchSampler(images, 32, 3, np.random.default_rng(0))
    batches = iter(sampler)

    sizes = [len(next(batches).noisy) for _ in range(3)]

    assert sizes == [3, 3, 1]
    assert sampler.epoch == 1
    assert sampler.batch_epoch == 0
    next(batches)
    assert sampler.batch_epoch == 1


def test_center_crop_takes_the_middle():
    image = np.arange(36, dtype=np.float64).reshape(6, 6)

    np.testing.assert_array_equal(center_crop(image, 2), [[14, 15], [20, 21]])


@pytest.mark.slow
def test_desk_scale_unet_learns(tmp_path):
    data = tmp_path / "desk"
    generate_dataset(RunConfig(seed=1, count=80, width=64, height=64, out=data))
    cfg = RunConfig(
        seed=1,
        out=tmp_path / "run",
        manifest=data,
        train=TrainConfig(
            model_kind="unet",
            steps=200,
            batch_size=8,
            lr=1e-4,
            input_size=64,
            epochs=30,
            decay_start_epoch=30,
            seed=1,
        ),
        unet=UNetConfig(depth=3, base_channels=8),
    )

    result = cmd_train(cfg)

    bce = result.history.column("bce")
    assert np.mean(bce[-5:]) <= 0.5 * bce[0]
    assert bce[-1] < bce[0]

    report = cmd_eval(cfg.model_copy(update={"out": tmp_path / "eval"}), checkpoint_path=result.checkpoint_path)
    assert report.row("unet").mean_mse < report.row(BASELINE_NAME).mean_mse
