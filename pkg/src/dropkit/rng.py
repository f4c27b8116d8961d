"""Named, counter-based random substreams.

Every stochastic component draws from a Philox generator keyed by a
SHA-256 digest of ``(seed, label, index)``. The same triple yields the
same stream on every platform and process, which is what makes scene
generation, detector-noise injection, and dataset materialization
bit-reproducible from their seeds alone.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Return an independent generator for one named purpose.

    Streams for distinct (seed, label, index) triples are statistically
    independent; the mapping is stable across runs and platforms.
    """
    digest = hashlib.sha256(f"{seed}:{label}:{index}".encode()).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def derive_seeds(seed: int, label: str, count: int) -> list[int]:
    """Derive ``count`` child seeds for per-item generators (e.g. one per image)."""
    gen = substream(seed, label)
    return [int(s) for s in gen.integers(0, 2**63 - 1, size=count)]
