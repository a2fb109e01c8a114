"""
Procedural master fingerprints and the noisy-print distortion model.

Masters are grown the way Gabor-iteration synthesisers do it: an orientation
field is built from a handful of singular points, a sparse random canvas is
repeatedly filtered with a bank of oriented Gabor kernels (each applied where
the field points its way), and the result is softly binarised into dark ridges
on white valleys.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from scipy import fft, ndimage

from app.schemas.dataset import PATTERN_CLASSES, DistortionParams, PatternClass
from app.services.image_io_service import GrayImage, InvalidImageError, validate_gray_image

logger = logging.getLogger(__name__)

MIN_MASTER_SIZE = 64
ORIENTATION_BINS = 16
RIDGE_PERIOD_RANGE = (6.0, 12.0)
GABOR_ITERATIONS = (4, 8)
BACKGROUND = 1.0

BLUR_SIGMA_MAX = 2.5
NOISE_SIGMA_MAX = 0.25
ROTATION_MAX_DEG = 10.0
TRANSLATION_MAX_PX = 10
SCRATCH_COUNT_MAX = 8
SCRATCH_WIDTH_RANGE = (1.0, 3.0)
OCCLUSION_MAX = 0.15


class FingerprintSynthesisError(ValueError):
    pass


@dataclass(frozen=True)
class OrientationField:
    """Per-pixel ridge-flow orientation in [0, pi)."""

    angles: npt.NDArray[np.float64]
    pattern_class: PatternClass

    @property
    def height(self) -> int:
        return self.angles.shape[0]

    @property
    def width(self) -> int:
        return self.angles.shape[1]


def _wrap_orientation(theta: np.ndarray) -> np.ndarray:
    wrapped = np.mod(theta, np.pi)
    # mod can round up to exactly pi for tiny negative inputs
    wrapped[wrapped >= np.pi] = 0.0
    return wrapped


def build_orientation_field(
    rng: np.random.Generator, width: int, height: int, pattern_class: PatternClass
) -> OrientationField:
    """Zero-pole orientation model: cores add half their angle, deltas subtract it."""
    if pattern_class not in PATTERN_CLASSES:
        raise FingerprintSynthesisError(f"Unknown pattern class '{pattern_class}'")

    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    z = xs + 1j * ys
    cx = width / 2 + rng.uniform(-0.05, 0.05) * width
    cy = height / 2 + rng.uniform(-0.05, 0.05) * height
    theta = np.full((height, width), rng.uniform(-0.15, 0.15))

    if pattern_class == "arch":
        bend = rng.uniform(0.3, 0.7)
        theta += (
            bend
            * np.sin(np.pi * (xs - cx) / width)
            * np.exp(-(((ys - 0.6 * cy) / (0.6 * height)) ** 2))
        )
    else:
        if pattern_class == "loop":
            cores = [complex(cx + rng.uniform(-0.1, 0.1) * width, cy - rng.uniform(0.05, 0.2) * height)]
            side = rng.choice([-1.0, 1.0])
            deltas = [complex(cx + side * rng.uniform(0.15, 0.3) * width, cy + rng.uniform(0.15, 0.3) * height)]
        else:
            gap = rng.uniform(0.04, 0.1) * height
            cores = [complex(cx, cy - gap), complex(cx + rng.uniform(-0.05, 0.05) * width, cy + gap)]
            deltas = []
        for core in cores:
            theta += 0.5 * np.angle(z - core)
        for delta in deltas:
            theta -= 0.5 * np.angle(z - delta)

    return OrientationField(angles=_wrap_orientation(theta), pattern_class=pattern_class)


@lru_cache(maxsize=32)
def _gabor_bank(period: float) -> tuple[np.ndarray, ...]:
    frequency = 1.0 / period
    sigma = 1.5 * period * np.sqrt(1.0 / (6.0 * np.log(10.0)))
    radius = int(np.ceil(period))
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1].astype(np.float64)
    envelope = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    bank = []
    for n in range(ORIENTATION_BINS):
        angle = n * np.pi / ORIENTATION_BINS
        # the carrier runs across the ridge, i.e. along the ridge normal
        kernel = envelope * np.cos(2 * np.pi * frequency * (-x * np.sin(angle) + y * np.cos(angle)))
        kernel -= kernel.mean()
        bank.append(kernel / np.abs(kernel).sum())
    return tuple(bank)


def _orientation_masks(field: OrientationField) -> list[np.ndarray]:
    half_bin = np.pi / (2 * ORIENTATION_BINS)
    masks = []
    for n in range(ORIENTATION_BINS):
        angle = n * np.pi / ORIENTATION_BINS
        distance = np.abs(np.mod(field.angles - angle + np.pi / 2, np.pi) - np.pi / 2)
        masks.append(ndimage.gaussian_filter((distance <= half_bin).astype(np.float64), sigma=2.0))
    total = np.sum(masks, axis=0)
    return [mask / total for mask in masks]


def _gabor_pass(canvas: np.ndarray, bank: tuple[np.ndarray, ...], masks: list[np.ndarray]) -> np.ndarray:
    height, width = canvas.shape
    size = bank[0].shape[0]
    shape = (fft.next_fast_len(height + size - 1), fft.next_fast_len(width + size - 1))
    offset = size // 2
    spectrum = fft.rfft2(canvas, s=shape)
    filtered = np.zeros_like(canvas)
    for kernel, mask in zip(bank, masks):
        response = fft.irfft2(spectrum * fft.rfft2(kernel, s=shape), s=shape)
        filtered += mask * response[offset : offset + height, offset : offset + width]
    return filtered


def _local_normalize(values: np.ndarray, period: float) -> np.ndarray:
    energy = ndimage.gaussian_filter(values**2, sigma=period)
    floor = 1e-6 * energy.max() + 1e-300
    return values / np.sqrt(energy + floor)


def _print_mask(width: int, height: int) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    radius = np.sqrt(((xs - width / 2) / (0.47 * width)) ** 2 + ((ys - height / 2) / (0.48 * height)) ** 2)
    return np.clip((1.0 - radius) * 12.0, 0.0, 1.0)


def generate_master(
    seed: int,
    width: int,
    height: int,
    pattern_class: PatternClass,
    *,
    ridge_period: float | None = None,
) -> GrayImage:
    """Deterministic ground-truth fingerprint of ``height`` x ``width`` pixels."""
    if width < MIN_MASTER_SIZE or height < MIN_MASTER_SIZE:
        raise FingerprintSynthesisError(
            f"Master dimensions must be at least {MIN_MASTER_SIZE}x{MIN_MASTER_SIZE}, got {width}x{height}"
        )
    if ridge_period is not None and not RIDGE_PERIOD_RANGE[0] <= ridge_period <= RIDGE_PERIOD_RANGE[1]:
        raise FingerprintSynthesisError(f"ridge_period must lie in {RIDGE_PERIOD_RANGE}")

    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    field = build_orientation_field(rng, width, height, pattern_class)
    period = float(ridge_period if ridge_period is not None else rng.uniform(*RIDGE_PERIOD_RANGE))
    iterations = int(rng.integers(GABOR_ITERATIONS[0], GABOR_ITERATIONS[1] + 1))

    canvas = np.zeros((height, width))
    blob_count = max(8, int(width * height / period**2))
    rows = rng.integers(0, height, size=blob_count)
    cols = rng.integers(0, width, size=blob_count)
    canvas[rows, cols] = rng.choice([-1.0, 1.0], size=blob_count)

    bank = _gabor_bank(round(period, 6))
    masks = _orientation_masks(field)
    for _ in range(iterations):
        canvas = np.tanh(1.5 * _local_normalize(_gabor_pass(canvas, bank, masks), period))

    ridges = 0.5 - 0.5 * canvas
    master = 1.0 - _print_mask(width, height) * (1.0 - ridges)
    logger.debug(
        "Master seed=%d class=%s period=%.2f iterations=%d", seed, pattern_class, period, iterations
    )
    return np.clip(master, 0.0, 1.0)


def sample_distortion(rng: np.random.Generator) -> DistortionParams:
    """One uniformly drawn parameter set for the noisy-print model."""
    return DistortionParams(
        blur_sigma=float(rng.uniform(0.0, BLUR_SIGMA_MAX)),
        noise_sigma=float(rng.uniform(0.0, NOISE_SIGMA_MAX)),
        rotation_deg=float(rng.uniform(-ROTATION_MAX_DEG, ROTATION_MAX_DEG)),
        translation_px=(
            int(rng.integers(-TRANSLATION_MAX_PX, TRANSLATION_MAX_PX + 1)),
            int(rng.integers(-TRANSLATION_MAX_PX, TRANSLATION_MAX_PX + 1)),
        ),
        scratch_count=int(rng.integers(0, SCRATCH_COUNT_MAX + 1)),
        scratch_width_px=float(rng.uniform(*SCRATCH_WIDTH_RANGE)),
        occlusion_fraction=float(rng.uniform(0.0, OCCLUSION_MAX)),
    )


def _translate(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    height, width = image.shape
    shifted = np.full_like(image, BACKGROUND)
    src_y = slice(max(0, -dy), min(height, height - dy))
    dst_y = slice(max(0, dy), min(height, height + dy))
    src_x = slice(max(0, -dx), min(width, width - dx))
    dst_x = slice(max(0, dx), min(width, width + dx))
    shifted[dst_y, dst_x] = image[src_y, src_x]
    return shifted


def apply_pose(image: GrayImage, rotation_deg: float, translation_px: tuple[int, int]) -> GrayImage:
    """Rotate about the centre (bilinear), then shift by whole pixels; exposed area is white."""
    posed = np.asarray(image, dtype=np.float64)
    if rotation_deg != 0.0:
        posed = ndimage.rotate(
            posed, rotation_deg, reshape=False, order=1, mode="constant", cval=BACKGROUND
        )
    dx, dy = translation_px
    if dx or dy:
        posed = _translate(posed, dx, dy)
    return np.clip(posed, 0.0, 1.0)


def _occlude(image: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    height, width = image.shape
    target = fraction * height * width
    erased = np.zeros(image.shape, dtype=bool)
    max_side = max(4, int(0.25 * min(height, width)))
    # patches never exceed the canvas, down to 1x1 images
    h_range = (min(4, height), min(max_side, height))
    w_range = (min(4, width), min(max_side, width))
    while erased.sum() < target:
        patch_h = int(rng.integers(h_range[0], h_range[1] + 1))
        patch_w = int(rng.integers(w_range[0], w_range[1] + 1))
        top = int(rng.integers(0, height - patch_h + 1))
        left = int(rng.integers(0, width - patch_w + 1))
        erased[top : top + patch_h, left : left + patch_w] = True
    occluded = image.copy()
    occluded[erased] = BACKGROUND
    return occluded


def apply_distortion(master: GrayImage, params: DistortionParams, rng: np.random.Generator) -> GrayImage:
    """rotate -> translate -> occlude -> blur -> additive Gaussian noise, clamped to [0, 1]."""
    image = validate_gray_image(master, "master")
    image = apply_pose(image, params.rotation_deg, params.translation_px)
    if params.occlusion_fraction > 0.0:
        image = _occlude(image, params.occlusion_fraction, rng)
    if params.blur_sigma > 0.0:
        image = ndimage.gaussian_filter(image, sigma=params.blur_sigma, mode="nearest")
    if params.noise_sigma > 0.0:
        image = image + rng.normal(0.0, params.noise_sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def _stroke_segment(mask: np.ndarray, start: np.ndarray, end: np.ndarray, width_px: float) -> None:
    height, width = mask.shape
    radius = width_px / 2.0
    pad = int(np.ceil(radius)) + 1
    y0 = max(0, int(np.floor(min(start[1], end[1]))) - pad)
    y1 = min(height, int(np.ceil(max(start[1], end[1]))) + pad + 1)
    x0 = max(0, int(np.floor(min(start[0], end[0]))) - pad)
    x1 = min(width, int(np.ceil(max(start[0], end[0]))) + pad + 1)
    if y0 >= y1 or x0 >= x1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    direction = end - start
    length_sq = float(direction @ direction)
    if length_sq == 0.0:
        t = np.zeros_like(xs)
    else:
        t = np.clip(((xs - start[0]) * direction[0] + (ys - start[1]) * direction[1]) / length_sq, 0.0, 1.0)
    dist_sq = (xs - start[0] - t * direction[0]) ** 2 + (ys - start[1] - t * direction[1]) ** 2
    mask[y0:y1, x0:x1] |= dist_sq <= radius**2


def add_scratches(image: GrayImage, rng: np.random.Generator, count: int, width_px: float) -> GrayImage:
    """Erase ``count`` random 3-6 segment polylines as hard white strokes."""
    if count < 0:
        raise FingerprintSynthesisError("Scratch count must be non-negative")
    source = validate_gray_image(image)
    if count == 0:
        return source.copy()
    if width_px <= 0:
        raise InvalidImageError("Scratch width must be positive")

    height, width = source.shape
    step_scale = 0.15 * min(height, width)
    mask = np.zeros(source.shape, dtype=bool)
    for _ in range(count):
        segments = int(rng.integers(3, 7))
        point = np.array([rng.uniform(0, width), rng.uniform(0, height)])
        heading = rng.uniform(0, 2 * np.pi)
        for _ in range(segments):
            heading += rng.uniform(-0.6, 0.6)
            length = rng.uniform(0.3, 1.0) * step_scale
            nxt = point + length * np.array([np.cos(heading), np.sin(heading)])
            _stroke_segment(mask, point, nxt, width_px)
            point = nxt

    scratched = source.copy()
    scratched[mask] = BACKGROUND
    return scratched
