"""
Seed derivation for the dataset forge.

Every random draw in the pipeline comes from a numpy ``Generator`` whose seed
is a pure function of the run seed, so records can be produced in any order
(or in parallel) and re-rendered later from their manifest entry alone.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Named sub-streams of one image seed. Order is part of the dataset format.
STREAMS = {
    "master": 0,
    "pattern": 1,
    "distortion": 2,
    "degrade": 3,
    "scratches": 4,
    "texture": 5,
    "background": 6,
}


def splitmix64(value: int) -> int:
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """64-bit seed for item ``index`` of a run seeded with ``master_seed``."""
    return splitmix64((master_seed & _MASK64) ^ splitmix64(index & _MASK64))


def stream_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for one named stage of one image."""
    try:
        key = STREAMS[stream]
    except KeyError as exc:
        raise ValueError(f"Unknown RNG stream '{stream}'") from exc
    return np.random.default_rng(np.random.SeedSequence(seed & _MASK64, spawn_key=(key,)))
