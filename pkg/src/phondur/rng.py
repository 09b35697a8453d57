"""Deterministic per-key RNG substreams.

Trial generation and synthesis draw from independent streams keyed by
(seed, speaker id, purpose) so results do not depend on iteration order or
worker count. Python's builtin hash is salted per process, so keys are
hashed with blake2b instead.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *keys) -> np.random.Generator:
    """A generator seeded by ``seed`` and a stable hash of ``keys``."""
    h = hashlib.blake2b(digest_size=16)
    for key in keys:
        h.update(str(key).encode("utf-8"))
        h.update(b"\x1f")
    words = np.frombuffer(h.digest(), dtype=np.uint32).tolist()
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *words]))
