"""Counter-based hashing used for edge states and tie-break marks.

Every random quantity in the package is a pure function of a seed, a stream
index and an integer key, so any single edge can be regenerated in isolation.
"""
from __future__ import annotations

import numpy as np

_U = np.uint64
_GOLDEN = _U(0x9E3779B97F4A7C15)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)
_OFFSET = 1 << 20

# stream tags keep edge draws, eta marks and derived seeds apart
TAG_EDGE = 0x45444745
TAG_ETA = 0x45544121
TAG_DERIVE = 0x44455256


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer applied elementwise to a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U(30))) * _M1
        z = (z ^ (z >> _U(27))) * _M2
    return z ^ (z >> _U(31))


def stream_key(seed: int, index: int, tag: int) -> np.uint64:
    s = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    with np.errstate(over="ignore"):
        k = mix64(s + _GOLDEN * _U(tag & 0xFFFFFFFF))
        k = mix64(k ^ mix64(np.array([index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) + _GOLDEN))
    return k[0]


def point_keys(x: np.ndarray, y: np.ndarray, orient: int = 0) -> np.ndarray:
    """Translation-free integer key for a lattice point (plus an orientation bit)."""
    xs = (np.asarray(x, dtype=np.int64) + _OFFSET).astype(np.uint64)
    ys = (np.asarray(y, dtype=np.int64) + _OFFSET).astype(np.uint64)
    return (xs << _U(23)) | (ys << _U(1)) | _U(orient)


def uniforms(key: np.uint64, keys: np.ndarray) -> np.ndarray:
    """Map hashed keys to doubles in [0, 1)."""
    with np.errstate(over="ignore"):
        h = mix64(mix64(keys + _GOLDEN) ^ key)
    return (h >> _U(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(seed: int, *parts: int) -> int:
    k = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    for part in parts:
        k = stream_key(int(k), int(part), TAG_DERIVE)
    return int(k)
