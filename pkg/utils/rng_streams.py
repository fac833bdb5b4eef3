"""
Reproducible random streams.

Every grid point of a sweep draws from its own generator derived by hashing
the point's identity with the master seed, so results do not depend on which
worker evaluates which point or in what order.
"""

import hashlib
from typing import Any

import numpy as np

def derive_seed(master_seed: int, *key: Any) -> int:
    """Stable 128-bit integer seed for (master_seed, *key)."""
    material = "|".join([str(int(master_seed))] + [repr(part) for part in key])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")

def substream(master_seed: int, *key: Any) -> np.random.Generator:
    """
    Independent generator for one work item.

    Args:
        master_seed: Run-level seed
        key: Identity of the work item, e.g. (season, frequency, distance index, drop index)

    Returns:
        numpy Generator seeded from the hashed key
    """
    return np.random.default_rng(np.random.SeedSequence(derive_seed(master_seed, *key)))

def get_rng(seed: int) -> np.random.Generator:
    """Plain seeded generator for single-stream callers."""
    return np.random.default_rng(seed)
