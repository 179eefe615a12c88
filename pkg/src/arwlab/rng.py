"""Deterministic seeding for parallel Monte Carlo replicates.

Replicate seeds are consecutive outputs of the splitmix64 stream seeded
with the master seed:

    seed_i = splitmix64_output(master + (i + 1) * GOLDEN)   (mod 2**64)

where GOLDEN = 0x9E3779B97F4A7C15.  The map depends only on
(master_seed, replicate_index), so results are identical no matter how
replicates are distributed across worker threads.  Seeds are returned as
numpy uint64 scalars, the type the compiled kernels expect.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _sm64(z: int) -> int:
    """splitmix64 output function (finalizer) of a 64-bit state."""
    z = int(z) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, index: int) -> np.uint64:
    """Seed for replicate `index`, the index-th splitmix64 output."""
    if index < 0:
        raise ValueError("replicate index must be nonnegative")
    return np.uint64(_sm64((int(master_seed) + (index + 1) * _GOLDEN) & _MASK64))


def substream(seed: int, lane: int) -> np.uint64:
    """Independent sub-seed for lane `lane` within one replicate."""
    return np.uint64(_sm64((int(seed) ^ _sm64(lane + 1)) & _MASK64))


def as_seed(rng) -> np.uint64:
    """Normalize an int seed / numpy Generator / None to a 64-bit seed."""
    if rng is None:
        return np.uint64(np.random.SeedSequence().generate_state(1, np.uint64)[0])
    if isinstance(rng, (int, np.integer)):
        return np.uint64(int(rng) & _MASK64)
    if isinstance(rng, np.random.Generator):
        return np.uint64(int(rng.integers(0, 1 << 63, dtype=np.int64)))
    raise TypeError(f"cannot derive a seed from {type(rng)!r}")


def generator(seed) -> np.random.Generator:
    """numpy Generator owned by a single replicate."""
    return np.random.default_rng(int(seed) & _MASK64)
