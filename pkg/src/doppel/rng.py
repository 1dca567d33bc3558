"""Counter-based random streams for reproducible, order-independent generation.

Every random draw in the toolkit comes from a Philox generator keyed by
(seed, purpose, *indices). Streams are independent of each other and of how
many draws happened before, so batch rows can be produced in any order, split
across workers, or replayed from the middle of a run.
"""

from __future__ import annotations

import numpy as np

# Stream purposes. Keeping these distinct guarantees that e.g. parameter
# sampling never shares a stream with perturbation noise.
PARAMS = 0
PERTURB_A = 1
PERTURB_B = 2
RENDER_NOISE = 3
FX = 4
TRAIN = 5
METRICS = 6


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator keyed by (seed, *path)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
