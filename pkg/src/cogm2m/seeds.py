"""Deterministic RNG derivation for reproducible Monte Carlo runs.

Every stochastic routine in this package draws from a Generator created
here. Child streams are derived from a root seed plus a label path, so a
trial's randomness depends only on (seed, labels) and never on execution
order or worker scheduling.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _encode(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, (float, np.floating)):
        # crc of the IEEE-754 bytes: stable across platforms and runs
        return zlib.crc32(struct.pack("<d", float(part)))
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"cannot derive seed material from {type(part).__name__}")


def seed_sequence(seed: int, *path) -> np.random.SeedSequence:
    """Build a SeedSequence from a root seed and a label path."""
    return np.random.SeedSequence([_encode(seed)] + [_encode(p) for p in path])


def spawn_rng(seed: int, *path) -> np.random.Generator:
    """Deterministic child Generator for (seed, *path).

    Path elements may be ints, floats, bools, or strings.
    """
    return np.random.default_rng(seed_sequence(seed, *path))


def child_seed(seed: int, *path) -> int:
    """Deterministic 64-bit child seed, for APIs that take integer seeds."""
    return int(seed_sequence(seed, *path).generate_state(1, dtype=np.uint64)[0])
