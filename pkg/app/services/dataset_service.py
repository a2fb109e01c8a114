"""
Paired clean/noisy dataset generation.

Every record is a pure function of ``(run seed, index)``: the per-image seed
is ``mix_seed(run_seed, index)`` and each pipeline stage draws from its own
named stream of that seed, so records can be rendered in any order, in
parallel, or re-rendered later from the manifest alone.
"""

from __future__ import annotations

import hashlib
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from app.core.config import settings
from app.core.seeding import mix_seed, stream_rng
from app.schemas.dataset import (
    PATTERN_CLASSES,
    SPLITS,
    DatasetManifest,
    GtPose,
    ManifestHeader,
    ManifestRecord,
    PatternClass,
    Split,
)
from app.schemas.run import RunConfig
from app.services.compositor_service import (
    BlendConfig,
    TextureLibrary,
    alpha_blend,
    build_texture_library,
    prepare_background,
    resolve_texture,
)
from app.services.fingerprint_service import (
    add_scratches,
    apply_distortion,
    apply_pose,
    generate_master,
    sample_distortion,
)
from app.services.image_io_service import GrayImage, write_image
from app.services.manifest_service import MANIFEST_NAME, write_manifest

logger = logging.getLogger(__name__)

DEFAULT_SPLIT_RATIOS = (7, 1, 2)


class DatasetError(RuntimeError):
    pass


@dataclass(frozen=True)
class RenderedSample:
    record: ManifestRecord
    clean: GrayImage
    noisy: GrayImage


def record_id(index: int) -> str:
    return f"nfd_{index:06d}"


def split_counts(count: int, ratios: tuple[int, int, int] = DEFAULT_SPLIT_RATIOS) -> dict[Split, int]:
    """Largest-remainder apportionment of ``count`` records over train/val/test."""
    total = sum(ratios)
    exact = [count * ratio / total for ratio in ratios]
    counts = [int(value) for value in exact]
    remainder = count - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return dict(zip(SPLITS, counts))


def assign_splits(
    ids: list[str], seed: int, ratios: tuple[int, int, int] = DEFAULT_SPLIT_RATIOS
) -> dict[str, Split]:
    """Deterministic split per id: ids ranked by a seeded hash fill train, then val, then test."""
    ranked = sorted(ids, key=lambda item: hashlib.sha256(f"{seed}:{item}".encode()).hexdigest())
    assignment: dict[str, Split] = {}
    start = 0
    for split, size in split_counts(len(ids), ratios).items():
        for item in ranked[start : start + size]:
            assignment[item] = split
        start += size
    return assignment


def _blend_noisy(
    master: GrayImage,
    record: ManifestRecord,
    library: TextureLibrary,
    width: int,
    height: int,
) -> GrayImage:
    seed = record.master_seed
    params = record.distortion
    degraded = apply_distortion(master, params, stream_rng(seed, "degrade"))
    scratched = add_scratches(
        degraded, stream_rng(seed, "scratches"), params.scratch_count, params.scratch_width_px
    )
    texture = resolve_texture(library, record.texture_id, width, height)
    background = prepare_background(texture, width, height, stream_rng(seed, "background"))
    return alpha_blend(scratched, background, BlendConfig(alpha=record.alpha))


def _clean_target(master: GrayImage, record: ManifestRecord, gt_pose: GtPose) -> GrayImage:
    if gt_pose == "master":
        return master
    return apply_pose(master, record.distortion.rotation_deg, record.distortion.translation_px)


def render_record(
    index: int,
    run_seed: int,
    split: Split,
    library: TextureLibrary,
    *,
    width: int,
    height: int,
    alpha: float,
    gt_pose: GtPose = "aligned",
) -> RenderedSample:
    """Render one clean/noisy pair and the manifest record describing it."""
    seed = mix_seed(run_seed, index)
    item_id = record_id(index)
    pattern: PatternClass = PATTERN_CLASSES[int(stream_rng(seed, "pattern").integers(0, len(PATTERN_CLASSES)))]
    texture = library.choose(stream_rng(seed, "texture"))
    record = ManifestRecord(
        id=item_id,
        split=split,
        clean_path=f"{item_id}_gt.pgm",
        noisy_path=f"{item_id}_noisy.pgm",
        master_seed=seed,
        pattern_class=pattern,
        texture_id=texture.id,
        alpha=alpha,
        distortion=sample_distortion(stream_rng(seed, "distortion")),
    )
    master = generate_master(seed, width, height, pattern)
    noisy = _blend_noisy(master, record, library, width, height)
    return RenderedSample(record=record, clean=_clean_target(master, record, gt_pose), noisy=noisy)


def rerender_record(
    record: ManifestRecord,
    header: ManifestHeader,
    library: TextureLibrary | None = None,
) -> tuple[GrayImage, GrayImage]:
    """Recompute the (clean, noisy) pair of an existing record from its manifest fields."""
    library = library if library is not None else TextureLibrary()
    master = generate_master(record.master_seed, header.width, header.height, record.pattern_class)
    noisy = _blend_noisy(master, record, library, header.width, header.height)
    return _clean_target(master, record, header.gt_pose), noisy


def generate_dataset(cfg: RunConfig, library: TextureLibrary | None = None) -> DatasetManifest:
    """
    Render ``cfg.count`` pairs into ``cfg.out`` and write the manifest last.

    The output directory must be empty or absent. On any failure the files
    written so far are removed again.
    """
    out = Path(cfg.out)
    if out.exists() and any(out.iterdir()):
        raise DatasetError(f"Output directory '{out}' is not empty")
    if library is None:
        library = build_texture_library(
            cfg.textures,
            cfg.width,
            cfg.height,
            procedural_count=cfg.procedural_texture_count,
            allow_procedural_fallback=cfg.allow_procedural_fallback,
        )

    created_dir = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    splits = assign_splits([record_id(i) for i in range(cfg.count)], cfg.seed, settings.split_ratios)

    def produce(index: int) -> ManifestRecord:
        sample = render_record(
            index,
            cfg.seed,
            splits[record_id(index)],
            library,
            width=cfg.width,
            height=cfg.height,
            alpha=cfg.alpha,
            gt_pose=cfg.gt_pose,
        )
        write_image(out / sample.record.clean_path, sample.clean)
        write_image(out / sample.record.noisy_path, sample.noisy)
        return sample.record

    try:
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                records = list(pool.map(produce, range(cfg.count)))
        else:
            records = [produce(index) for index in range(cfg.count)]
        header = ManifestHeader(
            alpha=cfg.alpha,
            counts={split: sum(1 for r in records if r.split == split) for split in SPLITS},
            width=cfg.width,
            height=cfg.height,
            gt_pose=cfg.gt_pose,
        )
        manifest = DatasetManifest(header=header, records=records)
        write_manifest(out / MANIFEST_NAME, manifest)
    except BaseException:
        logger.error("Dataset generation failed; removing partial output in %s", out)
        _remove_partial(out, created_dir)
        raise

    logger.info(
        "Generated %d pairs in %s (train=%d val=%d test=%d)",
        cfg.count,
        out,
        header.counts["train"],
        header.counts["val"],
        header.counts["test"],
    )
    return manifest


def _remove_partial(out: Path, created_dir: bool) -> None:
    if created_dir:
        shutil.rmtree(out, ignore_errors=True)
        return
    for path in out.iterdir():
        if path.is_file():
            path.unlink(missing_ok=True)


def cmd_generate(cfg: RunConfig) -> DatasetManifest:
    return generate_dataset(cfg)
