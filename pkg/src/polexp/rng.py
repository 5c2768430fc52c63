"""Splittable random streams keyed by explicit 64-bit seeds.

All randomness flows through ``generator(seed, *path)``: a PCG64 stream
whose 256-bit state is derived from ``(seed, path)`` by a splitmix64 hash
chain.  Distinct paths give independent streams, so per-step policy
draws, per-trajectory ensembles, and reset coins never consume each
other's bits, and any sub-stream can be reconstructed in isolation.
There is no global RNG state; identical inputs reproduce identical
streams across runs and platforms.

``StreamPool`` exposes the same streams through one reusable generator
object so hot loops can re-seed in O(1) without per-call allocation.
"""

from __future__ import annotations

import numpy as np

__all__ = ["generator", "derive_seed", "StreamPool"]

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_PATH_SALT = 0x632BE59BD9B4E019


def _mix(h: int) -> int:
    """splitmix64 finalizer."""
    h = (h + _GOLDEN) & _MASK
    h ^= h >> 30
    h = (h * 0xBF58476D1CE4E5B9) & _MASK
    h ^= h >> 27
    h = (h * 0x94D049BB133111EB) & _MASK
    return h ^ (h >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Collision-resistant 64-bit sub-seed for ``(seed, path)``."""
    h = _mix(int(seed) & _MASK)
    for p in path:
        h = _mix(h ^ _mix((int(p) + _PATH_SALT) & _MASK))
    return h


def _pcg_state(key: int) -> tuple[int, int]:
    """(state, inc) words for PCG64 from a 64-bit key."""
    s0 = _mix(key & _MASK)
    s1 = _mix(s0 ^ 0xA3EC4E242C4E0FD1)
    i0 = _mix(s1 ^ 0x9D2C5680B85EBCA6)
    i1 = _mix(i0 ^ 0xC2B2AE3D27D4EB4F)
    return (s0 << 64) | s1, ((i0 << 64) | i1) | 1


class StreamPool:
    """One reusable PCG64 generator with O(1) deterministic re-seeding.

    ``seeded(seed, *path)`` returns the pool's generator positioned at the
    start of the stream for ``(seed, path)`` -- the same stream that
    ``generator(seed, *path)`` would produce.  Not safe for concurrent use
    from multiple threads; create one pool per worker.
    """

    def __init__(self):
        self._bitgen = np.random.PCG64(0)
        self.gen = np.random.Generator(self._bitgen)
        self._template = self._bitgen.state

    def seeded(self, seed: int, *path: int) -> np.random.Generator:
        key = derive_seed(seed, *path) if path else int(seed) & _MASK
        state, inc = _pcg_state(key)
        self._template["state"]["state"] = state
        self._template["state"]["inc"] = inc
        self._template["has_uint32"] = 0
        self._template["uinteger"] = 0
        self._bitgen.state = self._template
        return self.gen


def generator(seed: int, *path: int) -> np.random.Generator:
    """Fresh independent generator for ``(seed, path)``."""
    return StreamPool().seeded(seed, *path)
