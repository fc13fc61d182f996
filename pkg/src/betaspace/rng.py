"""Counter-based uniform generator.

Every uniform variate is a pure function of ``(seed, stream, counter)``, so any
subset of draws can be regenerated in any order.  This is what makes sharded
sampling and the per-sample and batched direct samplers produce bit-identical
output.

Algorithm (all arithmetic modulo 2**64)::

    mix(z)      = SplitMix64 finalizer (Stafford variant 13)
    base(seed)  = mix(seed + GAMMA)
    key(s, k)   = mix(base(seed) + k * GAMMA)            # one key per stream k
    bits(key,c) = mix(key + (c + 1) * GAMMA_COUNTER)     # counter c = 0, 1, ...
    uniform     = (bits >> 11) * 2**-53                  # in [0, 1)

A stream is one requested sample.  The compiled core in ``_core.pyx`` mirrors
these definitions exactly; ``tests/test_rng.py`` pins known-answer values.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
GAMMA_COUNTER = 0xD1B54A32D192ED03
MIX_MUL1 = 0xBF58476D1CE4E5B9
MIX_MUL2 = 0x94D049BB133111EB
TO_UNIT = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL2) & MASK64
    return z ^ (z >> 31)


def base_key(seed: int) -> int:
    return mix64((seed & MASK64) + GAMMA)


def stream_key(seed: int, stream: int) -> int:
    return mix64(base_key(seed) + stream * GAMMA)


def uniform(key: int, counter: int) -> float:
    return (mix64(key + (counter + 1) * GAMMA_COUNTER) >> 11) * TO_UNIT


# numpy versions; uint64 arithmetic wraps silently on arrays
_U = np.uint64


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _U(30))
    z = z * _U(MIX_MUL1)
    z = z ^ (z >> _U(27))
    z = z * _U(MIX_MUL2)
    return z ^ (z >> _U(31))


def stream_keys(seed: int, start: int, count: int) -> np.ndarray:
    k = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(_U(base_key(seed)) + k * _U(GAMMA))


def uniform_array(keys: np.ndarray, counter: int | np.ndarray) -> np.ndarray:
    c = np.asarray(counter, dtype=np.uint64) + _U(1)
    with np.errstate(over="ignore"):
        bits = mix64_array(keys + c * _U(GAMMA_COUNTER))
    return (bits >> _U(11)).astype(np.float64) * TO_UNIT


def uniform_block(seed: int, start: int, count: int, n: int) -> np.ndarray:
    """Draw an ``n x count`` block: row ``i`` holds counter ``i`` of streams ``start..``."""
    keys = stream_keys(seed, start, count)
    out = np.empty((n, count))
    for i in range(n):
        out[i] = uniform_array(keys, i)
    return out


def derive_seed(seed: int, label: int) -> int:
    """Independent child seed, e.g. for permutations or auxiliary variables."""
    return mix64(base_key(seed) ^ mix64(label + GAMMA_COUNTER))
