"""Seeded Philox generators.

Every random draw in the package goes through :func:`generator`, so a
``(seed, stream)`` pair pins the exact bit stream on any platform.
"""

from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1


def generator(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an optional stream path.

    ``generator(s, b)`` for distinct ``b`` gives independent streams; this
    is how Monte Carlo blocks get their own randomness without sharing
    state between workers.
    """
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(i) for i in stream))
    return np.random.Generator(np.random.Philox(ss))
