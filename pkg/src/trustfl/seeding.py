"""Independent random streams keyed by (master seed, realization, stream tag, ids)."""

from __future__ import annotations

import numpy as np

DATA_SHARED = 0
DATA = 1
TRUST = 2
ATTACK = 3


def stream(master_seed: int, realization: int, tag: int, *ids: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(realization), int(tag), *map(int, ids)))
    return np.random.Generator(np.random.PCG64(ss))
