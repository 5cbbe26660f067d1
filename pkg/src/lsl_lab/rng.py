"""Keyed counter-based random streams.

Every stochastic work unit draws from its own Philox generator whose key is
derived from ``(master seed, *anchor)`` by ``numpy.random.SeedSequence``.
The anchor is a tuple of nonnegative integers such as ``(m, n, replicate)``
or ``(chunk,)``, so a unit's draws never depend on which worker ran it or in
what order.
"""
from __future__ import annotations

import numpy as np

__all__ = ["stream", "MASK64"]

MASK64 = (1 << 64) - 1


def stream(seed: int, *anchor: int) -> np.random.Generator:
    """Independent generator for the unit identified by ``anchor``."""
    words = [int(seed) & MASK64] + [int(a) for a in anchor]
    if any(w < 0 for w in words):
        raise ValueError("stream anchors must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
