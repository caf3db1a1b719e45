"""Counter-based random streams.

Every stream is a Philox generator whose key is derived from the run seed and
a tuple of integer tags (purpose, replicate, ...). Standard normals for
coefficient ``l`` are computed from the ``l``-th raw 64-bit word of the
stream, so a value depends only on ``(seed, tags, l)`` and never on how
much of the stream other code consumed or which worker produced it.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# stream purposes
OBSERVATION = 1
POSTERIOR_DRAWS = 2
TRUTH_SIGNS = 3


def stream_key(seed: int, *tags: int) -> np.ndarray:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in tags))
    return ss.generate_state(2, dtype=np.uint64)


def generator(seed: int, *tags: int) -> np.random.Generator:
    """A sequential generator for consumers with data-dependent draw counts
    (rejection sampling)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *tags)))


def uniforms(seed: int, count: int, *tags: int) -> np.ndarray:
    """Open-interval uniforms; entry ``i`` is a function of ``(seed, tags, i)`` only."""
    bits = np.random.Philox(key=stream_key(seed, *tags)).random_raw(count)
    return ((bits >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53


def standard_normals(seed: int, count: int, *tags: int) -> np.ndarray:
    return ndtri(uniforms(seed, count, *tags))
