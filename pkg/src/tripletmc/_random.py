"""Counter-based uniform draws.

A draw depends only on ``(seed, loop, stream, index, slot)``, so a loop gives
identical results however its children are split into shards. The mixing
function is the SplitMix64 finalizer applied to a Weyl sequence.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TO_UNIT = 2.0**-53

STREAM_DECOMPRESS = 1
STREAM_SPAWN = 2


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


_MASK = (1 << 64) - 1


def _mix_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _key(*words: int) -> np.uint64:
    k = 0
    for w in words:
        k = _mix_int((k + ((w & _MASK) + 1) * 0x9E3779B97F4A7C15) & _MASK)
    return np.uint64(k)


class LoopStream:
    """Uniform variates for one loop and one purpose."""

    def __init__(self, seed: int, loop: int, stream: int, slots: int = 1):
        self.key = _key(seed, loop, stream)
        self.slots = slots

    def uniform(self, index, slot: int = 0) -> np.ndarray:
        # uint64 array arithmetic wraps silently, which is the intended modular arithmetic
        index = np.asarray(index, dtype=np.uint64)
        ctr = index * np.uint64(self.slots) + np.uint64(slot + 1)
        bits = _mix(self.key + ctr * _GAMMA)
        return (bits >> _S11).astype(np.float64) * _TO_UNIT

    def uniforms(self, index) -> np.ndarray:
        """All slots at once: row ``k`` equals ``[uniform(index[k], s) for s in range(slots)]``."""
        index = np.asarray(index, dtype=np.uint64)
        ctr = index[:, None] * np.uint64(self.slots) + np.arange(1, self.slots + 1, dtype=np.uint64)
        bits = _mix(self.key + ctr * _GAMMA)
        return (bits >> _S11).astype(np.float64) * _TO_UNIT
