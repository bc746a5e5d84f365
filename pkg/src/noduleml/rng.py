"""Deterministic RNG streams keyed by (seed, *labels).

Every stochastic work item (a tree, a fold plan repetition, a bootstrap
replicate, a shuffle repetition) draws from its own stream derived from the
run seed and the item's key. Results are therefore independent of execution
order, worker count, and of how many sibling items exist.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "little")
    raise TypeError(f"stream key parts must be int or str, got {type(part)!r}")


def substream(seed: int, *key) -> np.random.Generator:
    """Generator for the work item identified by ``key`` under ``seed``."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key_part(p) for p in key]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def substream_seed(seed: int, *key) -> int:
    """32-bit seed for kernels that keep their own RNG state."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key_part(p) for p in key]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
