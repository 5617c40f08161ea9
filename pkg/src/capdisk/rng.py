"""Deterministic, splittable uniform source built on Philox4x64 counters.

Every uniform draw is a pure function of (seed, stream_id, counter), so
generation is order-independent: any partitioning of the index range across
workers reproduces the same values bit for bit.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from capdisk import backend

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0**-53
_SHIFT11 = np.uint64(11)


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def _component_to_int(c) -> int:
    if isinstance(c, str):
        digest = hashlib.sha256(c.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    return int(c) & _MASK64


@dataclass(frozen=True)
class RngSpec:
    """Identifies one uniform stream: (seed, stream_id) form the Philox key.

    Identical (seed, stream_id) reproduce identical uniforms regardless of
    worker count or evaluation order.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    @property
    def key(self) -> np.ndarray:
        return np.array([self.seed, self.stream_id], dtype=np.uint64)

    def substream(self, *components) -> "RngSpec":
        """Derive an independent stream from hashable components.

        Components may be ints or strings; the derivation is a splitmix64
        chain, stable across runs and platforms.
        """
        h = self.stream_id
        for c in components:
            h = _splitmix64(h ^ _splitmix64(_component_to_int(c)))
        return RngSpec(self.seed, h)


def philox_words(spec: RngSpec, counters: np.ndarray) -> np.ndarray:
    """Raw Philox4x64-10 output words for explicit (n, 4) counters."""
    return backend.philox4x64(counters, spec.key)


def uniform_blocks(spec: RngSpec, i, j=0, k=0, tag=0) -> np.ndarray:
    """Four uniforms in [0, 1) per counter (i, j, k, tag).

    The index arguments broadcast against each other; the result has the
    broadcast shape plus a trailing axis of length 4. Word w maps to
    (w >> 11) * 2**-53, so u = 1 is never produced.
    """
    parts = [np.asarray(x, dtype=np.uint64) for x in (i, j, k, tag)]
    bcast = np.broadcast_arrays(*parts)
    shape = bcast[0].shape
    counters = np.empty((bcast[0].size, 4), dtype=np.uint64)
    for col, arr in enumerate(bcast):
        counters[:, col] = arr.ravel()
    words = backend.philox4x64(counters, spec.key)
    u = (words >> _SHIFT11).astype(np.float64) * _INV_2_53
    return u.reshape(shape + (4,))


def point_uniforms(spec: RngSpec, n_points: int, start: int = 0):
    """(u, v) pairs for point indices [start, start + n_points).

    Slicing the index range is equivalent to slicing the full output.
    """
    idx = np.arange(start, start + n_points, dtype=np.uint64)
    blocks = uniform_blocks(spec, idx)
    return blocks[:, 0], blocks[:, 1]
