"""Deterministic seeding for every random stream in the package.

All randomness flows through numpy's Philox bit generator (counter-based,
4x64-bit words, 10 rounds), keyed directly with a 64-bit seed.  Substreams
for (instance index, trial index, ...) are derived with the splitmix64
finalizer, so a worker can reconstruct its stream from the master seed and
its indices alone; outputs never depend on scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One splitmix64 step: advance by the golden-ratio gamma and finalize."""
    x = (x + _GAMMA) & MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Fold substream indices into a master seed, one splitmix64 step each.

    derive_seed(s) != s, and distinct index tuples give (with overwhelming
    probability) unrelated Philox keys.  The fold is order-sensitive.
    """
    s = splitmix64(master & MASK64)
    for ix in indices:
        s = splitmix64(s ^ (ix & MASK64))
    return s


def generator(seed: int) -> np.random.Generator:
    """A Philox-backed Generator keyed with the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def random_words(rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform 64-bit words as a uint64 array."""
    return rng.integers(-(1 << 63), 1 << 63, size=n, dtype=np.int64).view(np.uint64)


def bernoulli_bits(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """n independent Bernoulli(p) bits as a uint8 array of 0/1.

    A draw is 1 iff a uniform 64-bit word is below p * 2**64.  The threshold
    is exact for every float64 p whose product with 2**64 is an integer
    (all p >= 2**-11, hence every probability used here); otherwise the
    realized probability differs from p by less than 2**-64.
    """
    if p <= 0.0:
        return np.zeros(n, dtype=np.uint8)
    if p >= 1.0:
        return np.ones(n, dtype=np.uint8)
    threshold = np.uint64(int(p * (2.0 ** 64)))
    return (random_words(rng, n) < threshold).astype(np.uint8)
