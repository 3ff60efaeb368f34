"""Seed handling.

Every random stream is a PCG64 generator built from
``SeedSequence(master, spawn_key=keys)``, so ``(master, replication, ...)``
tuples give independent, reproducible streams and any single replication of
a sweep can be rerun on its own.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(seed, *keys: int) -> np.random.SeedSequence:
    """``seed`` may be an int, a ``(master, key, ...)`` tuple or a SeedSequence."""
    if isinstance(seed, tuple):
        if not seed:
            raise ValueError("empty seed tuple")
        seed, keys = seed[0], tuple(seed[1:]) + tuple(keys)
    if isinstance(seed, np.random.SeedSequence):
        if keys:
            return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(keys))
        return seed
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))


def make_rng(seed, *keys: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator) and not keys:
        return seed
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))
