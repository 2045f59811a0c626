"""Deterministic random-stream plumbing.

Every sampler in the package is a pure function of (parameters, seed).
All randomness flows from one integer seed through named substreams, so
independent grid points, repetitions, and workers own disjoint streams.
Tree samplers additionally key each node's draws by the node's path from
the root, which makes a sampled tree invariant under deepening: sampling
the same seed with a larger horizon reproduces the shallower tree exactly
on the shared levels.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK63 = (1 << 63) - 1


def derive_seed(seed: int, *labels) -> int:
    """Collapse (seed, labels...) into a fresh 63-bit seed, stably across runs."""
    h = hashlib.blake2b(repr((seed,) + labels).encode(), digest_size=16)
    return int.from_bytes(h.digest(), "little") & _MASK63


def substream(seed: int, *labels) -> np.random.Generator:
    """PCG64 generator for the named substream (seed, labels...)."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *labels)))
