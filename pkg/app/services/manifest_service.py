"""JSON-lines dataset manifest: one header object, then one record per line."""

from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from app.schemas.dataset import DatasetManifest, ManifestHeader, ManifestRecord, MANIFEST_VERSION

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
IMAGE_SUFFIXES = {".pgm", ".ppm"}


class ManifestError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error["loc"]) or "<root>"
        if error["type"] == "extra_forbidden":
            parts.append(f"unknown field '{location}'")
        elif error["type"] == "missing":
            parts.append(f"missing field '{location}'")
        else:
            parts.append(f"invalid value {error.get('input')!r} for '{location}': {error['msg']}")
    return "; ".join(parts)


def dumps_manifest(manifest: DatasetManifest) -> str:
    lines = [manifest.header.model_dump_json()]
    lines.extend(record.model_dump_json() for record in manifest.records)
    return "\n".join(lines) + "\n"


def write_manifest(path: Path, manifest: DatasetManifest) -> None:
    path.write_text(dumps_manifest(manifest), encoding="utf-8")
    logger.info("Wrote manifest with %d records to %s", len(manifest.records), path)


def loads_manifest(text: str) -> DatasetManifest:
    """
    Parse manifest text, failing on the first bad line.

    Errors name the 1-based line number together with the offending field
    or value.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ManifestError(1, "missing header line")

    def parse(number: int, raw: str) -> dict:
        try:
            value = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ManifestError(number, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(value, dict):
            raise ManifestError(number, "expected a JSON object")
        return value

    try:
        header = ManifestHeader.model_validate(parse(1, lines[0]))
    except ValidationError as exc:
        raise ManifestError(1, _describe(exc)) from exc
    if header.version > MANIFEST_VERSION:
        raise ManifestError(1, f"unsupported manifest version {header.version}")

    records: list[ManifestRecord] = []
    seen: set[str] = set()
    for number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            record = ManifestRecord.model_validate(parse(number, raw))
        except ValidationError as exc:
            raise ManifestError(number, _describe(exc)) from exc
        if record.id in seen:
            raise ManifestError(number, f"duplicate id '{record.id}'")
        seen.add(record.id)
        records.append(record)

    for split, expected in header.counts.items():
        actual = sum(1 for record in records if record.split == split)
        if actual != expected:
            raise ManifestError(1, f"header counts {split}={expected} but found {actual} records")
    return DatasetManifest(header=header, records=records)


def read_manifest(path: Path) -> DatasetManifest:
    return loads_manifest(path.read_text(encoding="utf-8"))


def resolve_manifest_path(path: Path) -> Path:
    """Accept either the manifest file or the dataset directory holding it."""
    return path / MANIFEST_NAME if path.is_dir() else path


def validate_dataset(manifest: DatasetManifest, root: Path) -> list[str]:
    """
    Cross-check a manifest against its dataset directory.

    Returns a list of problems: referenced files that are missing and image
    files that no record (or more than one record) points at.
    """
    problems: list[str] = []
    referenced: dict[str, int] = {}
    for record in manifest.records:
        for relative in (record.clean_path, record.noisy_path):
            referenced[relative] = referenced.get(relative, 0) + 1
            if not (root / relative).is_file():
                problems.append(f"{record.id}: missing file {relative}")

    on_disk = {
        path.relative_to(root).as_posix()
        for path in root.rglob("*")
        if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES
    }
    for relative in sorted(on_disk - set(referenced)):
        problems.append(f"unreferenced file {relative}")
    for relative, uses in sorted(referenced.items()):
        if uses > 1:
            problems.append(f"{relative} referenced {uses} times")
    return problems
