"""Counter-based random streams.

Every random draw in the package comes from ``derive_rng(master, *keys)``,
which seeds a PCG64 generator with the entropy tuple ``(master, *keys)``.
Keys are small integers naming the purpose of the stream (see the constants
below) followed by counters such as a step index or a replicate number, so a
stream never depends on how many draws were made elsewhere and parallel
execution cannot reorder random numbers.
"""

import numpy as np

TRAIN_SPLIT = 0
STEP_SPLIT = 1
TRUTH = 2
DATA = 3
HOLDOUT = 4
PATH_ORDER = 5
VALIDATION_DRAWS = 6


def derive_rng(master, *keys):
    entropy = [int(master)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seeds and stream keys must be non-negative integers")
    return np.random.default_rng(entropy)


def derive_seed(master, *keys):
    """A 32-bit integer seed drawn from the stream ``(master, *keys)``."""
    return int(derive_rng(master, *keys).integers(0, 2**31 - 1))
