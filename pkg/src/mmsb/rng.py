"""Deterministic seed mixing and counter-based uniforms.

All mixing uses the SplitMix64 finalizer::

    z = x + 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

with arithmetic modulo 2**64.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def mix_seed(base: int, *parts: int) -> int:
    """Fold integers into a 64-bit seed: ``h = splitmix64(h ^ splitmix64(p))`` per part."""
    h = splitmix64(int(base) & MASK64)
    for p in parts:
        h = splitmix64(h ^ splitmix64(int(p) & MASK64))
    return h


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def pair_uniforms(seed: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) variates keyed by ``(seed, min(i, j), max(i, j))``.

    The value for a pair does not depend on which other pairs are requested,
    so edge sets drawn with different thresholds stay nested.
    """
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    key = np.uint64(splitmix64(int(seed) & MASK64))
    h = _splitmix64_array(key ^ _splitmix64_array(lo))
    h = _splitmix64_array(h ^ _splitmix64_array(hi ^ np.uint64(0xD1B54A32D192ED03)))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
