"""Split loading, crops and shuffled mini-batches."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np

from app.schemas.dataset import DatasetManifest, Split
from app.services.image_io_service import read_image
from app.training.state import Batch, PairedImages

logger = logging.getLogger(__name__)


class TrainingConfigError(ValueError):
    pass


def load_split(manifest: DatasetManifest, root: Path, split: Split) -> PairedImages:
    records = manifest.split(split)
    logger.debug("Loading %d %s pairs from %s", len(records), split, root)
    return PairedImages(
        ids=[record.id for record in records],
        noisy=[read_image(root / record.noisy_path) for record in records],
        clean=[read_image(root / record.clean_path) for record in records],
    )


def require_crop_fits(images: PairedImages, size: int, split: str) -> None:
    for item_id, image in zip(images.ids, images.noisy):
        height, width = image.shape
        if height < size or width < size:
            raise TrainingConfigError(
                f"{split} image {item_id} is {width}x{height}, smaller than input_size {size}"
            )


def center_crop(image: np.ndarray, size: int) -> np.ndarray:
    height, width = image.shape
    top = (height - size) // 2
    left = (width - size) // 2
    return image[top : top + size, left : left + size]


def random_crop_offsets(rng: np.random.Generator, shape: tuple[int, int], size: int) -> tuple[int, int]:
    height, width = shape
    return int(rng.integers(0, height - size + 1)), int(rng.integers(0, width - size + 1))


def stack(images: list[np.ndarray]) -> np.ndarray:
    return np.stack(images)[:, None, :, :].astype(np.float32)


def center_batch(images: PairedImages, size: int, indices: range | list[int] | None = None) -> Batch:
    chosen = list(indices) if indices is not None else list(range(len(images)))
    return Batch(
        noisy=stack([center_crop(images.noisy[i], size) for i in chosen]),
        clean=stack([center_crop(images.clean[i], size) for i in chosen]),
    )


class BatchSampler:
    """
    Endless stream of randomly cropped mini-batches.

    Each epoch visits every training pair once in a fresh permutation; the
    last batch of an epoch may be short. ``batch_epoch`` is the epoch the most
    recent batch belongs to and drives the learning-rate schedule.
    """

    def __init__(self, images: PairedImages, size: int, batch_size: int, rng: np.random.Generator) -> None:
        if not len(images):
            raise TrainingConfigError("Training split is empty")
        self.images = images
        self.size = size
        self.batch_size = batch_size
        self.rng = rng
        self.samples_seen = 0
        self.batch_epoch = 0

    @property
    def epoch(self) -> int:
        return self.samples_seen // len(self.images)

    def _crop(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        noisy, clean = self.images.noisy[index], self.images.clean[index]
        top, left = random_crop_offsets(self.rng, noisy.shape, self.size)
        window = (slice(top, top + self.size), slice(left, left + self.size))
        return noisy[window], clean[window]

    def __iter__(self) -> Iterator[Batch]:
        while True:
            order = self.rng.permutation(len(self.images))
            for start in range(0, len(order), self.batch_size):
                chunk = order[start : start + self.batch_size]
                self.batch_epoch = self.samples_seen // len(self.images)
                crops = [self._crop(int(index)) for index in chunk]
                self.samples_seen += len(chunk)
                yield Batch(noisy=stack([c[0] for c in crops]), clean=stack([c[1] for c in crops]))
