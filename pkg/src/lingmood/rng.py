"""Named, counter-based random streams.

Every piece of randomness in the package flows from a single integer seed
through (stage, index) substreams, so replicate i of any resampling loop
gets its own generator regardless of execution order or worker count.
"""

import hashlib
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _stage_key(stage: str) -> int:
    digest = hashlib.sha256(stage.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, stage: str, index: int = 0) -> np.random.Generator:
    """Generator for replicate `index` of the named resampling stage."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_stage_key(stage), index))
    return np.random.Generator(np.random.Philox(ss))


def permutation_indices(seed: int, stage: str, n_perm: int, n: int) -> np.ndarray:
    """n_perm row permutations of 0..n-1, one substream per replicate."""
    out = np.empty((n_perm, n), dtype=np.int64)
    for i in range(n_perm):
        out[i] = substream(seed, stage, i).permutation(n)
    return out


def bootstrap_indices(seed: int, stage: str, n_boot: int, n: int) -> np.ndarray:
    """n_boot with-replacement index draws of size n, one substream each."""
    out = np.empty((n_boot, n), dtype=np.int64)
    for i in range(n_boot):
        out[i] = substream(seed, stage, i).integers(0, n, size=n)
    return out
