"""
Binary checkpoint format.

Layout (little-endian):

    b"FPFN" | u32 version | u32 config length | config JSON (UTF-8)
    then, until EOF, one record per parameter:
    u32 name length | name (UTF-8) | u32 rank | rank x u32 dims | float32 data
"""

from __future__ import annotations

import json
import logging
import math
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.schemas.training import ModelBundleConfig

logger = logging.getLogger(__name__)

MAGIC = b"FPFN"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")
_FLOAT = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


def dumps_checkpoint(config: ModelBundleConfig, params: Mapping[str, np.ndarray]) -> bytes:
    config_blob = config.model_dump_json().encode("utf-8")
    chunks = [MAGIC, _U32.pack(FORMAT_VERSION), _U32.pack(len(config_blob)), config_blob]
    for name, value in params.items():
        encoded = name.encode("utf-8")
        array = np.asarray(value)
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(dim) for dim in array.shape)
        chunks.append(np.ascontiguousarray(array, dtype=_FLOAT).tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, raw: bytes) -> None:
        self.raw = raw
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self.raw)

    def take(self, size: int, what: str) -> bytes:
        end = self.pos + size
        if end > len(self.raw):
            raise CheckpointError(f"truncated record: expected {size} bytes for {what} at offset {self.pos}")
        chunk = self.raw[self.pos : end]
        self.pos = end
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(_U32.size, what))[0]


def loads_checkpoint(raw: bytes) -> tuple[ModelBundleConfig, dict[str, np.ndarray]]:
    reader = _Reader(raw)
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError("bad magic")
    reader.pos = len(MAGIC)
    version = reader.u32("version")
    if version == 0 or version > FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (supported: {FORMAT_VERSION})")

    blob = reader.take(reader.u32("config length"), "config")
    try:
        config = ModelBundleConfig.model_validate(json.loads(blob.decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as exc:
        raise CheckpointError(f"invalid config block: {exc}") from exc

    params: dict[str, np.ndarray] = {}
    while not reader.at_end():
        name_bytes = reader.take(reader.u32("name length"), "name")
        try:
            name = name_bytes.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"invalid parameter name at offset {reader.pos}") from exc
        if name in params:
            raise CheckpointError(f"duplicate parameter '{name}'")
        rank = reader.u32(f"{name} rank")
        shape = tuple(reader.u32(f"{name} dims") for _ in range(rank))
        data = reader.take(math.prod(shape) * _FLOAT.itemsize, f"{name} data")
        params[name] = np.frombuffer(data, dtype=_FLOAT).reshape(shape).astype(np.float32)
    return config, params


def save_checkpoint(path: Path, config: ModelBundleConfig, params: Mapping[str, np.ndarray]) -> int:
    raw = dumps_checkpoint(config, params)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(raw)
    logger.info("Checkpoint written to %s (%d parameters, %d bytes)", path, len(params), len(raw))
    return len(raw)


def load_checkpoint(path: Path) -> tuple[ModelBundleConfig, dict[str, np.ndarray]]:
    config, params = loads_checkpoint(path.read_bytes())
    logger.info("Loaded %s checkpoint from %s", config.model_kind, path)
    return config, params
