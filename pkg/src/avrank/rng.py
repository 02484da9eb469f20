"""Seeded random streams.

Every random draw in the library flows through a generator built here, so a
(master seed, replication, purpose) triple always yields the same stream no
matter how the work is split across chunks or processes.
"""
from __future__ import annotations

import zlib

import numpy as np


def tag_id(tag: str) -> int:
    """Stable 32-bit integer for a stream purpose label."""
    return zlib.crc32(tag.encode("utf-8"))


def stream(master_seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for ``master_seed`` and a tuple of integer or string keys."""
    entropy = [int(master_seed)] + [tag_id(k) if isinstance(k, str) else int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_generator(seed) -> np.random.Generator:
    """Accept a Generator, SeedSequence, int or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
