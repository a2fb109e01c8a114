import json

import pytest

from app.schemas.dataset import DatasetManifest, DistortionParams, ManifestHeader, ManifestRecord
from app.services.manifest_service import (
    MANIFEST_NAME,
    ManifestError,
    dumps_manifest,
    loads_manifest,
    read_manifest,
    resolve_manifest_path,
    validate_dataset,
    write_manifest,
)


def make_record(index: int, split: str = "train") -> ManifestRecord:
    return ManifestRecord(
        id=f"nfd_{index:06d}",
        split=split,
        clean_path=f"{split}/nfd_{index:06d}_gt.pgm",
        noisy_path=f"{split}/nfd_{index:06d}_noisy.pgm",
        master_seed=1000 + index,
        pattern_class="whorl",
        texture_id="procedural:perlin:7",
        alpha=0.45,
        distortion=DistortionParams(blur_sigma=0.8, noise_sigma=0.02, rotation_deg=-3.5, translation_px=(2, -4)),
    )


def make_manifest(*splits: str) -> DatasetManifest:
    records = [make_record(index, split) for index, split in enumerate(splits)]
    counts = {split: sum(1 for record in records if record.split == split) for split in ("train", "val", "test")}
    return DatasetManifest(header=ManifestHeader(alpha=0.45, counts=counts), records=records)


def test_empty_manifest_roundtrip():
    manifest = DatasetManifest(header=ManifestHeader(alpha=0.45, counts={}))

    text = dumps_manifest(manifest)

    assert text.count("\n") == 1
    assert loads_manifest(text) == manifest


def test_manifest_roundtrip_preserves_every_field():
    manifest = make_manifest("train", "val", "test")

    restored = loads_manifest(dumps_manifest(manifest))

    assert restored == manifest
    assert restored.records[0].distortion.translation_px == (2, -4)
    assert [record.id for record in restored.split("val")] == ["nfd_000001"]


def test_unknown_split_names_the_line_and_value():
    manifest = make_manifest("train")
    lines = dumps_manifest(manifest).splitlines()
    record = json.loads(lines[1])
    record["split"] = "holdout"
    lines[1] = json.dumps(record)

    with pytest.raises(ManifestError) as excinfo:
        loads_manifest("\n".join(lines))

    assert excinfo.value.line == 2
    assert "holdout" in str(excinfo.value)
    assert "split" in str(excinfo.value)


def test_unknown_field_is_rejected():
    lines = dumps_manifest(make_manifest("train")).splitlines()
    record = json.loads(lines[1])
    record["quality"] = 0.9
    lines[1] = json.dumps(record)

    with pytest.raises(ManifestError, match="unknown field 'quality'"):
        loads_manifest("\n".join(lines))


def test_duplicate_ids_are_rejected():
    lines = dumps_manifest(make_manifest("train", "train")).splitlines()
    lines[2] = lines[1]

    with pytest.raises(ManifestError, match="duplicate id") as excinfo:
        loads_manifest("\n".join(lines))

    assert excinfo.value.line == 3


def test_header_counts_must_match_records():
    manifest = make_manifest("train", "test")
    manifest.header.counts["train"] = 5

    with pytest.raises(ManifestError, match="header counts"):
        loads_manifest(dumps_manifest(manifest))


def test_newer_manifest_versions_are_rejected():
    manifest = make_manifest("train")
    manifest.header.version = 2

    with pytest.raises(ManifestError, match="unsupported manifest version"):
        loads_manifest(dumps_manifest(manifest))


def test_invalid_json_and_missing_header():
    with pytest.raises(ManifestError, match="missing header"):
        loads_manifest("")
    with pytest.raises(ManifestError, match="invalid JSON") as excinfo:
        loads_manifest(dumps_manifest(make_manifest()) + "{not json\n")
    assert excinfo.value.line == 2


def test_write_read_and_resolve(tmp_path):
    manifest = make_manifest("train", "val")
    write_manifest(tmp_path / MANIFEST_NAME, manifest)

    assert resolve_manifest_path(tmp_path) == tmp_path / MANIFEST_NAME
    assert read_manifest(resolve_manifest_path(tmp_path)) == manifest


def test_validate_dataset_reports_missing_and_orphaned_files(tmp_path):
    manifest = make_manifest("train", "val")
    for record in manifest.records:
        for relative in (record.clean_path, record.noisy_path):
            (tmp_path / relative).parent.mkdir(parents=True, exist_ok=True)
            (tmp_path / relative).write_bytes(b"P5\n1 1\n255\n\x00")

    assert validate_dataset(manifest, tmp_path) == []

    (tmp_path / manifest.records[0].noisy_path).unlink()
    (tmp_path / "train" / "stray.pgm").write_bytes(b"P5\n1 1\n255\n\x00")

    problems = validate_dataset(manifest, tmp_path)
    assert problems == [
        "nfd_000000: missing file train/nfd_000000_noisy.pgm",
        "unreferenced file train/stray.pgm",
    ]
