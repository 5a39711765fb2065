"""Deterministic random streams.

All randomness in the toolkit flows through Philox (a named 4x64
counter-based generator), so subsets, initializations and attack proposals
reproduce bit-for-bit across runs and platforms. Streams are keyed, never
globally seeded: the master stream uses key (seed, 0) and per-sample
streams use key (seed, 1 + sample_index), which keeps concurrent
per-sample attacks independent of batch composition.
"""

import numpy as np


def master_rng(seed):
    """Stream for whole-experiment draws (subsampling, parameter init)."""
    key = np.array([np.uint64(seed), np.uint64(0)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_rng(seed, sample_index):
    """Stream private to one (experiment seed, sample index) pair."""
    key = np.array([np.uint64(seed), np.uint64(1 + sample_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
