"""Exact sampling from selective Mallows distributions and selection generators.

Sampling uses the repeated-insertion construction: the items of the
(restricted) central ranking are inserted one by one, the t-th item going
at displacement d from the bottom of the partial ranking with probability
proportional to e^{-beta*d}.  Each insertion at displacement d adds
exactly d discordant pairs against the center, so the product of the
step weights reproduces e^{-beta*d_KT} / Z exactly.

Insertion decisions are integer-only: the per-step cumulative weights are
computed once per (size, beta) in double precision, frozen to 63-bit
integer thresholds, and compared against 63-bit uniform draws.  The
~1e-16 distortion of the frozen thresholds is far below every statistical
tolerance in this package, and it buys bit-identical profiles across
platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .core import MallowsParams, Ranking, SampleProfile, SelectionSequence
from .rng import Stream, draw_matrix

_SCALE_BITS = 63
_SCALE = 1 << _SCALE_BITS


class InfeasibleSpecError(ValueError):
    """Raised when a selection spec cannot produce a valid sequence."""


@dataclass(frozen=True)
class SelectionSpec:
    """Recipe for generating a selection sequence.

    kind:
      complete             every set is {0,...,n-1}
      pairwise             sets cycle over all C(n,2) pairs in lexicographic order
      mixed_pfrequent      ceil(p*r) full sets plus pairs cycling lexicographically;
                           the full sets alone guarantee p-frequency
      bernoulli_random     each alternative enters each set independently with
                           probability q (default sqrt(p), so each pair co-appears
                           with probability >= p); sets with < 2 elements are redrawn
      adversarial_matching ceil(p*r) full sets plus pairs drawn from the non-starved
                           perfect matchings, leaving the pairs of the first matching
                           observed only in the full sets
      explicit             passthrough of an explicit set list
    """

    kind: str
    n: int
    p: float = 1.0
    q: float | None = None
    sets: tuple[tuple[int, ...], ...] | None = None

    _KINDS = ("complete", "pairwise", "mixed_pfrequent", "bernoulli_random", "adversarial_matching", "explicit")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InfeasibleSpecError(f"unknown selection kind {self.kind!r}")
        if self.n < 2:
            raise InfeasibleSpecError("selection specs require n >= 2")
        if not (0.0 < self.p <= 1.0):
            raise InfeasibleSpecError("frequency parameter p must lie in (0, 1]")
        if self.kind == "bernoulli_random":
            q = math.sqrt(self.p) if self.q is None else self.q
            if not (0.0 < q <= 1.0):
                raise InfeasibleSpecError("inclusion probability q must lie in (0, 1]")
            if q * q < self.p - 1e-12:
                raise InfeasibleSpecError("bernoulli_random requires q^2 >= p so every pair co-appears with probability >= p")
        if self.kind == "explicit" and self.sets is None:
            raise InfeasibleSpecError("explicit selection spec requires a set list")

    def inclusion_probability(self) -> float:
        return math.sqrt(self.p) if self.q is None else self.q


def matching_family(n: int) -> list[list[tuple[int, int]]]:
    """Edge-disjoint perfect matchings covering every {even, odd} pair.

    Matching t (1-based, t = 1..n/2) pairs alternative 2k with
    (2k + 2t - 1) mod n.  Requires even n.  The first matching is
    {(0,1), (2,3), ..., (n-2, n-1)}.
    """
    if n % 2 != 0:
        raise InfeasibleSpecError("perfect matchings require an even number of alternatives")
    family = []
    for t in range(1, n // 2 + 1):
        family.append([(2 * k, (2 * k + 2 * t - 1) % n) for k in range(n // 2)])
    return family


def _full_set_count(p: float, r: int) -> int:
    # ceil(p*r) with a guard against float noise like 0.2*5 -> 1.0000000000000002
    return min(r, max(1, math.ceil(p * r - 1e-9)))


def generate_selection(spec: SelectionSpec, r: int, stream: Stream | None = None) -> SelectionSequence:
    """Generate a selection sequence of length ``r`` following ``spec``.

    Only ``bernoulli_random`` consumes randomness; the other kinds are
    deterministic in (spec, r).
    """
    if r < 1:
        raise InfeasibleSpecError("selection sequences must contain at least one set")
    n = spec.n
    full = tuple(range(n))

    if spec.kind == "complete":
        sets = [full] * r

    elif spec.kind == "pairwise":
        pairs = list(combinations(range(n), 2))
        sets = [pairs[i % len(pairs)] for i in range(r)]

    elif spec.kind == "mixed_pfrequent":
        n_full = _full_set_count(spec.p, r)
        pairs = list(combinations(range(n), 2))
        sets = [full] * n_full + [pairs[i % len(pairs)] for i in range(r - n_full)]

    elif spec.kind == "adversarial_matching":
        family = matching_family(n)
        n_full = _full_set_count(spec.p, r)
        # cycle over the matchings other than the starved first one, so the
        # first matching's pairs co-appear only in the full sets
        donors = [pair for matching in family[1:] for pair in matching]
        if not donors:  # n == 2: the single pair is all there is
            donors = list(family[0])
        sets = [full] * n_full + [donors[i % len(donors)] for i in range(r - n_full)]

    elif spec.kind == "bernoulli_random":
        if stream is None:
            raise ValueError("bernoulli_random selection requires a stream")
        threshold = np.uint64(min(_SCALE, round(spec.inclusion_probability() * _SCALE)))
        sets = []
        while len(sets) < r:
            want = r - len(sets)
            draws = (stream.u64_array(want * n) >> np.uint64(1)).reshape(want, n)
            member = draws < threshold
            for row in member:
                if row.sum() >= 2:
                    sets.append(tuple(np.flatnonzero(row)))
                    if len(sets) == r:
                        break

    else:  # explicit
        assert spec.sets is not None
        if len(spec.sets) != r:
            raise InfeasibleSpecError(f"explicit spec holds {len(spec.sets)} sets but r={r} requested")
        sets = list(spec.sets)

    return SelectionSequence(sets, n)


@dataclass(frozen=True)
class PFrequencyReport:
    """Result of a p-frequency audit of a selection sequence."""

    ok: bool
    min_pair_fraction: float
    counts: np.ndarray  # n x n symmetric co-appearance counts, zero diagonal

    def worst_pairs(self) -> list[tuple[int, int]]:
        n = self.counts.shape[0]
        lo = self.counts[np.triu_indices(n, 1)].min()
        out = []
        for i in range(n):
            for j in range(i + 1, n):
                if self.counts[i, j] == lo:
                    out.append((i, j))
        return out


def verify_p_frequent(selection: SelectionSequence, p: float) -> PFrequencyReport:
    """Check that every pair co-appears in at least a p fraction of the sets."""
    r = len(selection)
    if r == 0:
        raise ValueError("cannot audit an empty selection sequence")
    n = selection.n
    counts = np.zeros((n, n), dtype=np.int64)
    for s in selection:
        idx = np.fromiter(s, dtype=np.int64, count=len(s))
        a, b = _triu_pairs(len(s))
        np.add.at(counts, (idx[a], idx[b]), 1)
    counts = counts + counts.T
    min_frac = counts[np.triu_indices(n, 1)].min() / r
    return PFrequencyReport(ok=bool(min_frac >= p - 1e-12), min_pair_fraction=float(min_frac), counts=counts)


@lru_cache(maxsize=None)
def _triu_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(m, 1)


@lru_cache(maxsize=256)
def _insertion_thresholds(m: int, beta: float) -> tuple[np.ndarray, ...]:
    """Frozen 63-bit CDF thresholds for insertion steps 2..m.

    Step s (the partial ranking grows to size s) admits displacements
    d = 0..s-1 from the bottom with weight e^{-beta*d}.
    """
    weights = np.exp(-beta * np.arange(m, dtype=np.float64))
    tables = []
    for s in range(2, m + 1):
        cum = np.cumsum(weights[:s])
        thr = np.floor(cum / cum[-1] * _SCALE).astype(np.uint64)
        thr[-1] = np.uint64(_SCALE)
        tables.append(thr)
    return tuple(tables)


def _apply_insertion_codes(center_items: tuple[int, ...], codes) -> list[int]:
    out = [center_items[0]]
    for k, d in enumerate(codes):
        out.insert(len(out) - d, center_items[k + 1])
    return out


def sample_mallows(center: Ranking, beta: float, stream: Stream) -> Ranking:
    """Draw one ranking of center's item set, Mallows-distributed around it."""
    if beta <= 0:
        raise ValueError("spread parameter beta must be positive")
    m = len(center)
    if m == 0:
        raise ValueError("cannot sample a ranking of an empty set")
    if m == 1:
        return Ranking(center.items, validate=False)
    tables = _insertion_thresholds(m, float(beta))
    draws = stream.u64_array(m - 1) >> np.uint64(1)
    codes = [int(np.searchsorted(tables[i], draws[i], side="right")) for i in range(m - 1)]
    return Ranking(_apply_insertion_codes(center.items, codes), validate=False)


def _restricted_center_items(center: Ranking, s: tuple[int, ...]) -> tuple[int, ...]:
    pos = center.positions
    return tuple(sorted(s, key=pos.__getitem__))


def sample_profile(params: MallowsParams, selection: SelectionSequence, stream: Stream) -> SampleProfile:
    """Draw one independent Mallows sample per selection set.

    Position ``l`` of the profile is sampled from ``stream.child(l)``, so
    the result is identical whether positions are drawn sequentially or
    in parallel, and equals calling :func:`sample_mallows` position by
    position with those child streams.
    """
    if selection.n != params.n:
        raise ValueError("selection sequence and parameters disagree on n")
    r = len(selection)
    if r == 0:
        return SampleProfile((), selection, validate=False)

    keys = stream.child_keys(r)
    by_size: dict[int, list[int]] = {}
    for ell, s in enumerate(selection.sets):
        by_size.setdefault(len(s), []).append(ell)

    beta = params.beta
    center = params.center
    rankings: list[Ranking | None] = [None] * r
    for m, idxs in by_size.items():
        if m == 1:  # unreachable: SelectionSequence rejects singletons
            for ell in idxs:
                rankings[ell] = Ranking(selection.sets[ell], validate=False)
            continue
        tables = _insertion_thresholds(m, beta)
        draws = draw_matrix(keys[np.asarray(idxs, dtype=np.int64)], m - 1) >> np.uint64(1)
        codes = np.empty((len(idxs), m - 1), dtype=np.int64)
        for i in range(m - 1):
            codes[:, i] = np.searchsorted(tables[i], draws[:, i], side="right")
        code_rows = codes.tolist()
        if m == 2:
            pos = center.positions
            for row, ell in enumerate(idxs):
                a, b = selection.sets[ell]
                if pos[a] > pos[b]:
                    a, b = b, a
                items = (b, a) if code_rows[row][0] else (a, b)
                rankings[ell] = Ranking(items, validate=False)
        else:
            full = m == params.n
            restricted: dict[tuple[int, ...], tuple[int, ...]] = {}
            for row, ell in enumerate(idxs):
                if full:
                    base = center.items
                else:
                    s = selection.sets[ell]
                    base = restricted.get(s)
                    if base is None:
                        base = restricted[s] = _restricted_center_items(center, s)
                rankings[ell] = Ranking(_apply_insertion_codes(base, code_rows[row]), validate=False)
    return SampleProfile(rankings, selection, validate=False)


def mallows_pmf(center: Ranking, beta: float) -> dict[tuple[int, ...], float]:
    """Exact Mallows probabilities for every permutation of a small item set."""
    from itertools import permutations

    from .core import kendall_tau, partition_function

    m = len(center)
    if m > 8:
        raise ValueError("exact pmf is limited to 8 alternatives")
    z = partition_function(m, beta)
    out = {}
    for perm in permutations(center.items):
        d = kendall_tau(center, Ranking(perm, validate=False))
        out[perm] = math.exp(-beta * d) / z
    return out
