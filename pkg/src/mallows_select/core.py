"""Ranking types, Kendall tau distances, restriction, and the Mallows normalizer.

Alternatives are 0-based integers and positions are 0-based throughout;
every external text format uses the same convention.  All types here are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
import operator
from functools import lru_cache
from typing import Iterable, Iterator, Sequence


class Ranking:
    """A total order over a set of distinct alternatives.

    ``items`` lists alternatives from first (top) to last; ``position_of``
    is the inverse map.  A complete ranking over n alternatives is a
    permutation of {0, ..., n-1}.
    """

    __slots__ = ("items", "_pos")

    def __init__(self, items: Iterable[int], *, validate: bool = True):
        if validate:
            try:
                items = tuple(operator.index(x) for x in items)
            except TypeError:
                raise ValueError("alternatives must be integers") from None
            seen = set()
            for x in items:
                if x < 0:
                    raise ValueError(f"alternatives must be nonnegative integers, got {x!r}")
                if x in seen:
                    raise ValueError(f"duplicate alternative {x} in ranking")
                seen.add(x)
        else:
            items = tuple(items)
        self.items = items
        self._pos: dict[int, int] | None = None

    @classmethod
    def identity(cls, n: int) -> "Ranking":
        return cls(range(n), validate=False)

    @property
    def positions(self) -> dict[int, int]:
        if self._pos is None:
            self._pos = {x: t for t, x in enumerate(self.items)}
        return self._pos

    def position_of(self, item: int) -> int:
        try:
            return self.positions[item]
        except KeyError:
            raise KeyError(f"alternative {item} not in ranking") from None

    def is_complete(self, n: int) -> bool:
        return len(self.items) == n and set(self.items) == set(range(n))

    def item_set(self) -> frozenset[int]:
        return frozenset(self.items)

    def to_line(self) -> str:
        return ",".join(str(x) for x in self.items)

    @classmethod
    def from_line(cls, line: str) -> "Ranking":
        parts = [p for p in line.strip().split(",") if p != ""]
        return cls(int(p) for p in parts)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[int]:
        return iter(self.items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Ranking) and self.items == other.items

    def __hash__(self) -> int:
        return hash(self.items)

    def __repr__(self) -> str:
        return f"Ranking({list(self.items)})"


class MallowsParams:
    """Central ranking plus spread parameter of a Mallows distribution."""

    __slots__ = ("center", "beta")

    def __init__(self, center: Ranking, beta: float):
        if beta <= 0:
            raise ValueError("spread parameter beta must be positive")
        if not center.is_complete(len(center)):
            raise ValueError("central ranking must be a complete ranking over {0,...,n-1}")
        self.center = center
        self.beta = float(beta)

    @property
    def n(self) -> int:
        return len(self.center)

    def __repr__(self) -> str:
        return f"MallowsParams(n={self.n}, beta={self.beta})"


class SelectionSequence:
    """An ordered list of alternative subsets on which samples are drawn.

    Every set must contain at least two alternatives; smaller sets carry
    no pairwise information and are rejected.  Sets are stored as sorted
    tuples.
    """

    __slots__ = ("sets", "n")

    def __init__(self, sets: Iterable[Iterable[int]], n: int, *, validate: bool = True):
        canon = tuple(tuple(sorted(s)) for s in sets)
        if validate:
            for idx, s in enumerate(canon):
                if len(s) < 2:
                    raise ValueError(f"selection set {idx} has fewer than 2 alternatives")
                if len(set(s)) != len(s):
                    raise ValueError(f"selection set {idx} contains duplicates")
                if s[0] < 0 or s[-1] >= n:
                    raise ValueError(f"selection set {idx} contains an alternative outside [0, {n})")
        self.sets = canon
        self.n = n

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.sets)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SelectionSequence)
            and self.n == other.n
            and self.sets == other.sets
        )

    def __repr__(self) -> str:
        return f"SelectionSequence(r={len(self.sets)}, n={self.n})"


class SampleProfile:
    """Incomplete rankings paired one-to-one with their selection sets."""

    __slots__ = ("rankings", "selection")

    def __init__(self, rankings: Sequence[Ranking], selection: SelectionSequence, *, validate: bool = True):
        rankings = tuple(rankings)
        if validate:
            if len(rankings) != len(selection):
                raise ValueError("profile length does not match selection length")
            for idx, (rk, s) in enumerate(zip(rankings, selection)):
                if tuple(sorted(rk.items)) != s:
                    raise ValueError(f"ranking {idx} is not a permutation of its selection set")
        self.rankings = rankings
        self.selection = selection

    @property
    def n(self) -> int:
        return self.selection.n

    def __len__(self) -> int:
        return len(self.rankings)

    def __iter__(self) -> Iterator[Ranking]:
        return iter(self.rankings)


def _count_inversions(seq: list[int]) -> int:
    """Inversions of an integer sequence by merge sort, O(m log m)."""
    m = len(seq)
    if m < 2:
        return 0
    buf = list(seq)
    tmp = [0] * m
    count = 0
    width = 1
    while width < m:
        for lo in range(0, m, 2 * width):
            mid = min(lo + width, m)
            hi = min(lo + 2 * width, m)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if buf[i] <= buf[j]:
                    tmp[k] = buf[i]
                    i += 1
                else:
                    tmp[k] = buf[j]
                    count += mid - i
                    j += 1
                k += 1
            tmp[k:hi] = buf[i:mid] if i < mid else buf[j:hi]
            buf[lo:hi] = tmp[lo:hi]
        width *= 2
    return count


def kendall_tau(a: Ranking, b: Ranking) -> int:
    """Number of unordered pairs ranked oppositely by ``a`` and ``b``.

    Both rankings must cover exactly the same item set.  The distance
    depends only on relative order, so it applies unchanged to rankings
    over non-contiguous item sets.
    """
    if len(a) != len(b) or a.item_set() != b.item_set():
        raise ValueError("kendall_tau requires rankings over the same item set")
    pos = a.positions
    return _count_inversions([pos[x] for x in b.items])


def restrict(pi: Ranking, s: Iterable[int]) -> Ranking:
    """Ranking over ``s`` preserving the relative order induced by ``pi``."""
    keep = set(s)
    if not keep:
        raise ValueError("cannot restrict to an empty set")
    missing = keep - set(pi.items)
    if missing:
        raise ValueError(f"restriction set contains alternatives not in the ranking: {sorted(missing)}")
    return Ranking((x for x in pi.items if x in keep), validate=False)


def kendall_tau_incomplete(center: Ranking, sample: Ranking) -> int:
    """Pairs of the sample's item set ranked reversely by center and sample."""
    return kendall_tau(restrict(center, sample.items), sample)


@lru_cache(maxsize=None)
def log_partition_function(m: int, beta: float) -> float:
    """log of the Mallows normalizer on m alternatives at spread beta."""
    if m < 1:
        raise ValueError("partition function requires at least one alternative")
    if beta <= 0:
        raise ValueError("spread parameter beta must be positive")
    # product form: prod_{t=1..m} (1 - e^{-t beta}) / (1 - e^{-beta})
    log_denom = math.log1p(-math.exp(-beta))
    total = 0.0
    for t in range(1, m + 1):
        total += math.log1p(-math.exp(-t * beta)) - log_denom
    return total


def partition_function(m: int, beta: float) -> float:
    """Mallows normalizer Z(m, beta): sum over all m! permutations of e^{-beta d}.

    Computed in log space internally; equal to the closed product form
    prod_{t=1..m} (1 - e^{-t beta}) / (1 - e^{-beta}).
    """
    return math.exp(log_partition_function(m, float(beta)))


def pointwise_distance(a: Ranking, b: Ranking) -> int:
    """Max over alternatives of the absolute difference of their positions."""
    if len(a) != len(b) or a.item_set() != b.item_set():
        raise ValueError("pointwise_distance requires complete rankings over the same alternatives")
    pos_b = b.positions
    return max(abs(t - pos_b[x]) for t, x in enumerate(a.items)) if len(a) else 0
