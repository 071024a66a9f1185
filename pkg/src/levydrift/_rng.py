"""Deterministic seed derivation for replicated experiments.

Replication ``r`` of an experiment with base seed ``s`` always draws its
randomness from ``make_rng(derive_seed(s, r))``.  The derivation is a fixed
64-bit SplitMix-style mixer, so results are reproducible across platforms,
worker counts and scheduling orders.  The mixer constants below are part of
the reproducibility contract and must not change:

    GAMMA = 0x9E3779B97F4A7C15
    MIX1  = 0xBF58476D1CE4E5B9
    MIX2  = 0x94D049BB133111EB

``derive_seed(s, r)`` computes ``mix64((s + (r + 1) * GAMMA) mod 2**64)``
where ``mix64`` is the xor-shift/multiply finalizer with the constants
above.  The derived value keys a counter-based Philox bit generator.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """Finalize a 64-bit value with the SplitMix xor-shift/multiply mixer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(base_seed: int, index: int) -> int:
    """Derive the seed for replication ``index`` from ``base_seed``.

    Parameters
    ----------
    base_seed : int
        Experiment-level seed (any Python integer; reduced mod 2**64).
    index : int
        Replication index, ``index >= 0``.

    Returns
    -------
    int
        A 64-bit seed, independent across indices for fixed ``base_seed``.
    """
    if index < 0:
        raise ValueError(f"replication index must be >= 0, got {index}")
    return mix64((base_seed + (index + 1) * _GAMMA) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """Create the canonical generator (counter-based Philox) for a seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
