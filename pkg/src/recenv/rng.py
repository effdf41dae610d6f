"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
``(master seed, purpose tag, *indices)``.  Two streams with different keys are
independent, and a stream's output depends only on its key, so Monte Carlo
results do not depend on how trials are scheduled across threads.
"""
from __future__ import annotations

import zlib

import numpy as np


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Return the generator for the stream ``(seed, tag, *indices)``.

    >>> a = stream(7, "field", 3).standard_normal(2)
    >>> b = stream(7, "field", 3).standard_normal(2)
    >>> bool((a == b).all())
    True
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = (tag_id(tag),) + tuple(int(i) for i in indices)
    seq = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))
