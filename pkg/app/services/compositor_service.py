"""
Background textures and alpha compositing of noisy prints.

The blend is g = alpha * f0 + (1 - alpha) * f1 with the fingerprint as f0
and the texture as f1, computed in floating point and only quantised when a
file is written.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import ndimage

from app.services.image_io_service import (
    GrayImage,
    InvalidImageError,
    read_image,
    require_same_shape,
    validate_gray_image,
)

logger = logging.getLogger(__name__)

TextureKind = Literal["stripes", "checker", "perlin-like", "speckle"]
TEXTURE_KINDS: tuple[TextureKind, ...] = ("stripes", "checker", "perlin-like", "speckle")
MIN_TEXTURE_SIZE = 32
TEXTURE_EXTENSIONS = {".pgm", ".ppm"}


class TextureError(ValueError):
    pass


class BlendConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=0.45, ge=0.0, le=1.0)


@dataclass(frozen=True)
class TextureSource:
    id: str
    image: GrayImage
    origin: Literal["file", "procedural"]


def alpha_blend(fg: GrayImage, bg: GrayImage, cfg: BlendConfig) -> GrayImage:
    fg = np.asarray(fg, dtype=np.float64)
    bg = np.asarray(bg, dtype=np.float64)
    require_same_shape(fg, bg)
    blended = cfg.alpha * fg + (1.0 - cfg.alpha) * bg
    # keeps every pixel inside [min(fg, bg), max(fg, bg)] despite rounding
    return np.clip(blended, np.minimum(fg, bg), np.maximum(fg, bg))


def prepare_background(
    tex: TextureSource, width: int, height: int, rng: np.random.Generator
) -> GrayImage:
    """Random width x height window of the texture, tiling it first when it is too small."""
    source = tex.image
    tex_h, tex_w = source.shape
    if tex_h < MIN_TEXTURE_SIZE or tex_w < MIN_TEXTURE_SIZE:
        raise TextureError(
            f"Texture '{tex.id}' is {tex_w}x{tex_h}; at least {MIN_TEXTURE_SIZE}x{MIN_TEXTURE_SIZE} is required"
        )
    if (tex_h, tex_w) == (height, width):
        return source.copy()
    if tex_h < height or tex_w < width:
        reps = (-(-height // tex_h), -(-width // tex_w))
        source = np.tile(source, reps)
        tex_h, tex_w = source.shape
    top = int(rng.integers(0, tex_h - height + 1))
    left = int(rng.integers(0, tex_w - width + 1))
    return source[top : top + height, left : left + width].copy()


def _stretch(values: np.ndarray, low: float, high: float) -> np.ndarray:
    span = values.max() - values.min()
    if span == 0:
        return np.full_like(values, (low + high) / 2)
    return low + (values - values.min()) / span * (high - low)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6 - 15) + 10)


def _value_noise(rng: np.random.Generator, height: int, width: int, scale: float) -> np.ndarray:
    grid_h = int(np.ceil(height / scale)) + 2
    grid_w = int(np.ceil(width / scale)) + 2
    lattice = rng.random((grid_h, grid_w))
    ys = np.arange(height) / scale
    xs = np.arange(width) / scale
    yi = np.floor(ys).astype(int)
    xi = np.floor(xs).astype(int)
    yf = _fade(ys - yi)[:, None]
    xf = _fade(xs - xi)[None, :]
    v00 = lattice[np.ix_(yi, xi)]
    v01 = lattice[np.ix_(yi, xi + 1)]
    v10 = lattice[np.ix_(yi + 1, xi)]
    v11 = lattice[np.ix_(yi + 1, xi + 1)]
    top = v00 + xf * (v01 - v00)
    bottom = v10 + xf * (v11 - v10)
    return top + yf * (bottom - top)


def procedural_texture(
    kind: TextureKind, seed: int, width: int, height: int, *, period: int | None = None
) -> TextureSource:
    """Deterministic synthetic texture spanning at least [0.2, 0.8]."""
    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)

    if kind == "stripes":
        wavelength = float(period or rng.uniform(8.0, 24.0))
        angle = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2 * np.pi)
        values = np.sin(2 * np.pi * (xs * np.cos(angle) + ys * np.sin(angle)) / wavelength + phase)
        image = _stretch(values, 0.1, 0.9)
    elif kind == "checker":
        cell_period = int(period or rng.choice([8, 16, 24, 32]))
        if cell_period < 2 or cell_period % 2:
            raise TextureError("Checker period must be an even integer >= 2")
        half = cell_period // 2
        cells = ((xs.astype(int) // half) + (ys.astype(int) // half)) % 2
        image = np.where(cells == 0, 0.2, 0.8)
    elif kind == "perlin-like":
        octaves = 5
        noise = np.zeros((height, width))
        amplitude, scale = 1.0, float(period or rng.uniform(24.0, 64.0))
        for _ in range(octaves):
            noise += amplitude * _value_noise(rng, height, width, max(scale, 1.0))
            amplitude *= 0.5
            scale /= 2.0
        image = _stretch(noise, 0.1, 0.9)
    elif kind == "speckle":
        grain = ndimage.gaussian_filter(rng.random((height, width)), sigma=0.7)
        low, high = np.percentile(grain, [2.0, 98.0])
        image = 0.1 + (grain - low) / (high - low) * 0.8
    else:
        raise TextureError(f"Unknown texture kind '{kind}'")

    return TextureSource(id=f"{kind}:{seed}", image=np.clip(image, 0.0, 1.0), origin="procedural")


def parse_procedural_id(texture_id: str) -> tuple[TextureKind, int] | None:
    kind, sep, seed = texture_id.rpartition(":")
    if not sep or kind not in TEXTURE_KINDS or not seed.isdigit():
        return None
    return kind, int(seed)  # type: ignore[return-value]


@dataclass
class TextureLibrary:
    """Read-only collection of backgrounds keyed by unique id."""

    textures: dict[str, TextureSource] = field(default_factory=dict)

    def add(self, texture: TextureSource) -> None:
        if texture.id in self.textures:
            raise TextureError(f"Duplicate texture id '{texture.id}'")
        validate_gray_image(texture.image, f"texture '{texture.id}'")
        self.textures[texture.id] = texture

    @property
    def ids(self) -> list[str]:
        return sorted(self.textures)

    def __len__(self) -> int:
        return len(self.textures)

    def get(self, texture_id: str) -> TextureSource:
        try:
            return self.textures[texture_id]
        except KeyError as exc:
            raise TextureError(f"Unknown texture id '{texture_id}'") from exc

    def choose(self, rng: np.random.Generator) -> TextureSource:
        if not self.textures:
            raise TextureError("Texture library is empty")
        ids = self.ids
        return self.textures[ids[int(rng.integers(0, len(ids)))]]

    @classmethod
    def from_directory(cls, directory: Path) -> "TextureLibrary":
        library = cls()
        for path in sorted(Path(directory).iterdir()):
            if path.suffix.lower() not in TEXTURE_EXTENSIONS:
                continue
            library.add(TextureSource(id=path.stem, image=read_image(path), origin="file"))
        logger.info("Loaded %d textures from %s", len(library), directory)
        return library

    @classmethod
    def procedural(cls, count: int, width: int, height: int, seed: int = 0) -> "TextureLibrary":
        library = cls()
        for index in range(count):
            kind = TEXTURE_KINDS[index % len(TEXTURE_KINDS)]
            library.add(procedural_texture(kind, seed + index, width, height))
        return library


def build_texture_library(
    directory: Path | None,
    width: int,
    height: int,
    *,
    procedural_count: int = 16,
    allow_procedural_fallback: bool = True,
) -> TextureLibrary:
    if directory is not None and Path(directory).is_dir():
        library = TextureLibrary.from_directory(directory)
        if len(library):
            return library
    if not allow_procedural_fallback:
        raise TextureError(
            f"No P5/P6 textures found in '{directory}' and procedural fallback is disabled"
        )
    if directory is not None:
        logger.warning("No textures found in %s; using procedural backgrounds", directory)
    return TextureLibrary.procedural(procedural_count, width, height)


def resolve_texture(library: TextureLibrary, texture_id: str, width: int, height: int) -> TextureSource:
    """Library lookup that can rebuild procedural textures from their id alone."""
    if texture_id in library.textures:
        return library.get(texture_id)
    parsed = parse_procedural_id(texture_id)
    if parsed is None:
        raise TextureError(f"Unknown texture id '{texture_id}'")
    kind, seed = parsed
    return procedural_texture(kind, seed, width, height)
