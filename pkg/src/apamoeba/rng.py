"""Counter-based random streams keyed by (seed, purpose, index...).

Every task draws from its own Philox stream, so results do not depend on how
tasks are scheduled across threads.
"""
import zlib

import numpy as np


def _tag(x):
    if isinstance(x, str):
        return zlib.crc32(x.encode())
    return int(x)


def stream(seed: int, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(_tag(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def jittered_grid(rng: np.random.Generator, n: int, lo, hi, batches: int = 1) -> np.ndarray:
    """Stratified samples: one uniform point per cell of a regular grid.

    The grid has ``round(n ** (1/d))`` cells per axis. Returns (batches, m**d, d).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.size
    m = max(1, int(round(n ** (1.0 / d))))
    idx = np.indices((m,) * d).reshape(d, -1).T.astype(float)
    u = rng.random((batches, idx.shape[0], d))
    return lo + (hi - lo) * (idx[None] + u) / m
