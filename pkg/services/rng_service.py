# services/rng_service.py
"""
Reproducible randomness.

Every random stage draws from numpy's counter-based Philox generator keyed
by SeedSequence([seed, *stream]), so a single 64-bit seed fixes the whole
run and identical inputs reproduce bit-exactly across platforms.
"""

import zlib
from typing import Union

import numpy as np

StreamKey = Union[int, str]

SEED_MASK = (1 << 64) - 1


def _key(part: StreamKey) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & SEED_MASK


def make_rng(seed: int, *stream: StreamKey) -> np.random.Generator:
    """Generator for ``seed`` on the named sub-stream (e.g. make_rng(7, "nibble", 2))."""
    entropy = [_key(seed)] + [_key(s) for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit seed from an existing stream."""
    return int(rng.integers(0, 2 ** 63 - 1))
