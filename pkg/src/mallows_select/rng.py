"""Splittable counter-based random streams built on the splitmix64 mixer.

Every randomized routine in this package draws from a :class:`Stream`.
Streams are cheap value objects: a 64-bit key plus a draw counter.  The
i-th draw of a stream is ``mix64(key + i*GAMMA)``, so draws can be
produced one at a time or as a whole numpy block with identical results.
Child streams are derived from the parent key and an integer path, never
from the draw position, which makes any tree of substreams reproducible
regardless of evaluation order or thread count.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` over a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def _fold(key: int, element: int) -> int:
    if element < 0:
        raise ValueError("stream path elements must be nonnegative integers")
    return mix64(key ^ mix64((element + _GAMMA) & _MASK))


class Stream:
    """A seedable, splittable source of 64-bit uniforms."""

    __slots__ = ("key", "_ctr")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & _MASK
        self._ctr = counter

    @classmethod
    def from_seed(cls, seed: int) -> "Stream":
        return cls(mix64((int(seed) ^ _MIX2) & _MASK))

    def child(self, *path: int) -> "Stream":
        """Derive an independent substream keyed by an integer path.

        Children depend only on the parent key and the path, not on how
        many draws the parent has produced.
        """
        key = self.key
        for element in path:
            key = _fold(key, int(element))
        return Stream(key)

    def child_keys(self, count: int) -> np.ndarray:
        """Keys of ``child(0) .. child(count-1)`` as a uint64 array."""
        idx = np.arange(count, dtype=np.uint64) + np.uint64(_GAMMA)
        return mix64_array(np.uint64(self.key) ^ mix64_array(idx))

    def u64(self) -> int:
        """Next 64-bit uniform."""
        self._ctr += 1
        return mix64((self.key + self._ctr * _GAMMA) & _MASK)

    def u64_array(self, count: int) -> np.ndarray:
        """Next ``count`` 64-bit uniforms as a uint64 array."""
        ctr = np.arange(self._ctr + 1, self._ctr + count + 1, dtype=np.uint64)
        self._ctr += count
        return mix64_array(np.uint64(self.key) + ctr * np.uint64(_GAMMA))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via the 128-bit multiply-shift method."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return (self.u64() * n) >> 64

    def permutation(self, n: int) -> tuple[int, ...]:
        """Uniformly random permutation of range(n) by Fisher-Yates."""
        items = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return tuple(items)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def uniform(self) -> float:
        """Float in [0, 1); for statistics only, never for sampling decisions."""
        return self.u64() / 18446744073709551616.0

    def __repr__(self) -> str:  # pragma: no cover
        return f"Stream(key={self.key:#018x}, counter={self._ctr})"


def draw_matrix(keys: np.ndarray, count: int) -> np.ndarray:
    """Draws 1..count for every key in ``keys``, shape (len(keys), count).

    Row ``i`` equals the first ``count`` outputs of ``Stream(keys[i])``.
    """
    steps = (np.arange(1, count + 1, dtype=np.uint64)) * np.uint64(_GAMMA)
    return mix64_array(keys[:, None] + steps[None, :])
