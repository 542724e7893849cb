"""Counter-based random numbers built on the SplitMix64 mixing function.

Every random draw in the package is a pure function of ``(key, counter)``:

    mix(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
             z ^= z >> 27; z *= 0x94D049BB133111EB
             z ^= z >> 31
    draw(key, i) = mix(key + (i + 1) * 0x9E3779B97F4A7C15)    (mod 2**64)

which is exactly the i-th output of a SplitMix64 generator seeded with
``key``. Child keys are ``derive(key, label) = mix(mix(key) ^ label)``.
Because draws are indexed rather than sequential, results do not depend on
evaluation order or on how work is split across threads, and they are
bit-identical on every platform with IEEE doubles.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# string labels are hashed to integers with FNV-1a so that keys stay stable
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix(z):
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _label_int(label):
    if isinstance(label, str):
        h = _FNV_OFFSET
        for byte in label.encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & _MASK
        return h
    return int(label) & _MASK


def derive(key, *labels):
    """Child key of ``key`` along a path of integer or string labels."""
    k = np.uint64(int(key) & _MASK)
    for label in labels:
        k = mix(mix(k) ^ np.uint64(_label_int(label)))
    return int(k)


def draw(key, counters):
    """Raw 64-bit outputs for the given counters; ``key`` may be an array."""
    key = np.asarray(key, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = key + (counters + np.uint64(1)) * GOLDEN
    return mix(state)


def uniform(key, counters):
    """Doubles in [0, 1) with 53 random bits."""
    bits = draw(key, counters) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / 9007199254740992.0)


def rademacher(key, counters):
    """+1.0 / -1.0 from the top bit of each draw."""
    top = draw(key, counters) >> np.uint64(63)
    return 1.0 - 2.0 * top.astype(np.float64)


def generator(key):
    """A numpy Generator (Philox, counter-based) seeded from ``key``.

    Used where a distribution other than uniform/sign is needed, e.g.
    Gaussian test directions.
    """
    return np.random.Generator(np.random.Philox(key=int(key) & _MASK))
