"""Seeded counter-based random streams.

Every stochastic routine draws from a Philox generator keyed by the root seed
plus a tuple of integers naming the task (setting index, fold, instance...),
so results do not depend on scheduling order.
"""

import numpy as np


def make_rng(seed, *key: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if key:
            raise TypeError("child keys need an integer root seed")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *key: int) -> int:
    """Deterministic 63-bit integer seed for a named sub-task."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))
