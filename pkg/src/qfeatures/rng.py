"""Deterministic RNG stream derivation.

Every random draw in the package comes from a stream keyed by the master seed
plus a tuple of tags (trial index, stage name, sample id, block index, ...).
Results therefore do not depend on execution order or thread scheduling.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError("integer stream tags must be nonnegative")
        return int(tag)
    return zlib.crc32(str(tag).encode())


def stream(seed: int, *tags) -> np.random.Generator:
    """Independent generator for (seed, *tags)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_tag_to_int(t) for t in tags))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
