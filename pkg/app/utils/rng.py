"""Seed derivation for reproducible Monte Carlo runs.

Child seeds depend only on the master seed and a tuple of integer keys
(cell index, replication index, ...), never on scheduling order.
"""
from typing import Sequence

import numpy as np


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 32-bit child seed for the given key path"""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def derive_seeds(master_seed: int, count: int, *prefix: int) -> Sequence[int]:
    """Seeds for replications 0..count-1 under a common key prefix"""
    return [derive_seed(master_seed, *prefix, rep) for rep in range(count)]


def get_rng(seed: int) -> np.random.Generator:
    """Independent generator for one task; generators are never shared across threads"""
    return np.random.default_rng(seed)
