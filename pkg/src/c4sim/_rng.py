"""Counter-based random streams.

Every stochastic step derives its own generator from the run seed and a
tuple of integer keys, so results never depend on scheduling or on how many
workers share the work.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# Key namespaces, kept distinct so unrelated streams never collide.
KEY_SHOTS = 1
KEY_DIRICHLET = 2
KEY_GENERATE = 3
KEY_OPTIMIZE = 4
KEY_TOMO = 5
KEY_MH = 6
KEY_RESAMPLE = 7
