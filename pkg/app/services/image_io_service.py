"""
Grayscale image currency and the binary PGM/PPM codec.

A GrayImage is a 2-D float64 array of shape (height, width) whose values lie
in [0, 1]. Files are 8-bit binary netpbm: P5 (gray) or P6 (RGB, reduced to
luma on ingest). Writing always produces P5 with a single newline after the
maxval field.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import numpy.typing as npt

GrayImage = npt.NDArray[np.float64]

_WHITESPACE = b" \t\n\r\v\f"
_LUMA = np.array([0.299, 0.587, 0.114])


class InvalidImageError(ValueError):
    pass


class ImageFormatError(ValueError):
    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


def validate_gray_image(image: np.ndarray, name: str = "image") -> GrayImage:
    """Return ``image`` as float64 after checking the GrayImage invariants."""
    array = np.asarray(image, dtype=np.float64)
    if array.ndim != 2:
        raise InvalidImageError(f"{name} must be 2-D, got shape {array.shape}")
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise InvalidImageError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(array)) or array.min() < 0.0 or array.max() > 1.0:
        raise InvalidImageError(f"{name} values must lie in [0, 1]")
    return array


def require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidImageError(f"Dimension mismatch: {a.shape} vs {b.shape}")


def _read_token(raw: bytes, pos: int, field: str) -> tuple[bytes, int]:
    while pos < len(raw) and (raw[pos] in _WHITESPACE or raw[pos] == ord("#")):
        if raw[pos] == ord("#"):
            while pos < len(raw) and raw[pos] not in b"\n\r":
                pos += 1
        else:
            pos += 1
    start = pos
    while pos < len(raw) and raw[pos] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise ImageFormatError(field, "missing header field")
    return raw[start:pos], pos


def _read_int(raw: bytes, pos: int, field: str) -> tuple[int, int]:
    token, pos = _read_token(raw, pos, field)
    try:
        value = int(token)
    except ValueError as exc:
        raise ImageFormatError(field, f"not an integer: {token!r}") from exc
    if value < 1:
        raise ImageFormatError(field, f"must be positive, got {value}")
    return value, pos


def load_image(raw: bytes) -> GrayImage:
    """Decode P5/P6 bytes into a GrayImage with intensities v/255."""
    if len(raw) < 2 or raw[:2] not in (b"P5", b"P6"):
        raise ImageFormatError("magic", f"expected P5 or P6, got {raw[:2]!r}")
    channels = 1 if raw[:2] == b"P5" else 3
    pos = 2
    if pos >= len(raw) or raw[pos] not in _WHITESPACE:
        raise ImageFormatError("magic", "magic number must be followed by whitespace")

    width, pos = _read_int(raw, pos, "width")
    height, pos = _read_int(raw, pos, "height")
    maxval, pos = _read_int(raw, pos, "maxval")
    if maxval != 255:
        raise ImageFormatError("maxval", f"only 8-bit maxval 255 is supported, got {maxval}")
    if pos >= len(raw) or raw[pos] not in _WHITESPACE:
        raise ImageFormatError("payload", "missing whitespace after maxval")
    pos += 1

    expected = width * height * channels
    payload = raw[pos : pos + expected]
    if len(payload) < expected:
        raise ImageFormatError("payload", f"truncated: expected {expected} bytes, got {len(payload)}")

    values = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    if channels == 3:
        values = values.reshape(height, width, 3) @ _LUMA
    return values.reshape(height, width) / 255.0


def quantize(image: np.ndarray) -> npt.NDArray[np.uint8]:
    return np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_pgm(image: np.ndarray) -> bytes:
    array = np.asarray(image)
    if array.ndim != 2:
        raise InvalidImageError(f"Only 2-D images can be encoded, got shape {array.shape}")
    height, width = array.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + quantize(array).tobytes()


def read_image(path: Path) -> GrayImage:
    return load_image(Path(path).read_bytes())


def write_image(path: Path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(image))
