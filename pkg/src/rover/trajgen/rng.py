"""Deterministic per-purpose random streams derived from a seed and string keys."""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *keys) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(str(k).encode()) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
