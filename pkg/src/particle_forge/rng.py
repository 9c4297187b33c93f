"""Counter-based random numbers keyed by stable identifiers.

Every random quantity in the package (edge coins, grain radii, clock
inter-arrival times, marks) is a pure function of a master seed and a tuple
of integer keys.  Nothing depends on draw order, so growing a window or
skipping a vertex never perturbs the randomness attached to anything else.

The mixer is the SplitMix64 finalizer applied to a running fold of the keys.
It is vectorized over numpy broadcasting, which numpy's bit generators are
not when each element needs its own key.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["tag", "key_hash", "keyed_uniform", "MarkStream", "replica_seed"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / float(1 << 53)


def tag(name: str) -> int:
    """Stable integer tag for a string key component."""
    return zlib.crc32(name.encode("utf-8"))


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _S30)
    z = z * _M1
    z = z ^ (z >> _S27)
    z = z * _M2
    return z ^ (z >> _S31)


def _as_u64(k) -> np.ndarray:
    if isinstance(k, str):
        return np.uint64(tag(k))
    if isinstance(k, (int, np.integer)) and not isinstance(k, np.uint64):
        # two's complement keeps negative lattice coordinates distinct
        return np.uint64(int(k) & 0xFFFFFFFFFFFFFFFF)
    a = np.asarray(k)
    if a.dtype == np.uint64:
        return a
    return a.astype(np.int64).view(np.uint64)


def key_hash(seed, *keys) -> np.ndarray:
    """Fold ``seed`` and ``keys`` into a 64-bit hash (broadcast over arrays)."""
    with np.errstate(over="ignore"):
        h = _mix(_as_u64(seed) + _GOLDEN)
        for i, k in enumerate(keys):
            h = _mix(h ^ (_as_u64(k) + _GOLDEN * np.uint64(i + 2)))
    return h


def keyed_uniform(seed, *keys) -> np.ndarray | float:
    """Uniform variate on [0, 1) determined by ``(seed, *keys)``.

    Array keys broadcast against each other; scalar inputs give a float.
    """
    h = key_hash(seed, *keys)
    u = (h >> _S11).astype(np.float64) * _INV53
    if np.ndim(u) == 0:
        return float(u)
    return u


def replica_seed(master, index) -> np.ndarray | int:
    """Derive the seed of replica ``index`` from a master seed."""
    h = key_hash(master, "replica", index)
    if np.ndim(h) == 0:
        return int(h)
    return h


class MarkStream:
    """Uniform variates derived from a single event mark.

    The first draw is the mark itself, later draws are hashed from its bit
    pattern.  Two events with equal marks therefore see equal randomness.
    """

    __slots__ = ("mark", "_i")

    def __init__(self, mark: float):
        self.mark = float(mark)
        self._i = 0

    def uniform(self) -> float:
        i = self._i
        self._i += 1
        if i == 0:
            return self.mark
        bits = np.float64(self.mark).view(np.uint64)
        return keyed_uniform(bits, "substream", i)
