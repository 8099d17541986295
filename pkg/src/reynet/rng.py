"""Counter-based pseudo-random numbers for reproducible datasets and init.

The generator ("sm64ctr") is SplitMix64 viewed in counter mode.  The value of
stream ``key`` at counter ``c`` is

    value(key, c) = mix64((key + (c + 1) * GOLDEN) mod 2^64)

where GOLDEN = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finalizer:

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

(all arithmetic mod 2^64).  Draws advance the counter by one, so a stream is
a pure function of (key, counter) and any draw can be reproduced in any
implementation from this description alone.  Child streams are derived by

    child_key = mix64((key ^ SPLIT_SALT) + tag * GOLDEN)

with SPLIT_SALT = 0xD2B74407B1CE6E93, so (key, tag) pairs give independent
streams for weights, shuffles, and so on.

Uniform floats use the top 53 bits: u = (value >> 11) * 2^-53 lies in [0, 1).
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SPLIT_SALT = 0xD2B74407B1CE6E93
_INV_2_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return z


class CounterRng:
    """Deterministic 64-bit stream addressed by (key, counter)."""

    def __init__(self, seed: int, counter: int = 0):
        self.key = seed & _MASK
        self.counter = counter

    def split(self, tag: int) -> "CounterRng":
        """Independent child stream for the given integer tag."""
        child = _mix64(((self.key ^ _SPLIT_SALT) + tag * _GOLDEN) & _MASK)
        return CounterRng(child)

    def next_u64(self) -> int:
        v = _mix64((self.key + (self.counter + 1) * _GOLDEN) & _MASK)
        self.counter += 1
        return v

    def u64_array(self, size: int) -> np.ndarray:
        start = self.counter
        self.counter += size
        counters = np.arange(start + 1, start + size + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.key) + counters * np.uint64(_GOLDEN)
        return _mix64_array(z)

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        """size uniform float64 draws in [low, high) via 53-bit scaling."""
        bits = self.u64_array(size) >> np.uint64(11)
        u = bits.astype(np.float64) * _INV_2_53
        return low + (high - low) * u

    def shuffled_indices(self, size: int) -> np.ndarray:
        """A reproducible permutation of range(size): argsort of u64 keys."""
        keys = self.u64_array(size)
        return np.argsort(keys, kind="stable")
