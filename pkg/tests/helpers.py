"""Independent oracles and generators shared across the test suite.

Everything here deliberately avoids the library's optimized code paths:
distances by quadratic pair scans, maximizers by exhaustive enumeration,
counts by a second bookkeeping pass.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from mallows_select.core import Ranking, SampleProfile, SelectionSequence
from mallows_select.rng import Stream


def pair_scan_kendall(a: Ranking, b: Ranking) -> int:
    """O(m^2) discordant-pair count."""
    pos_a, pos_b = a.positions, b.positions
    items = list(a.items)
    count = 0
    for x_idx in range(len(items)):
        for y_idx in range(x_idx + 1, len(items)):
            x, y = items[x_idx], items[y_idx]
            if (pos_a[x] - pos_a[y]) * (pos_b[x] - pos_b[y]) < 0:
                count += 1
    return count


def recount_pairwise(profile: SampleProfile) -> tuple[np.ndarray, np.ndarray]:
    """Independent O(r * n^2) tally of appearances and precedences."""
    n = profile.n
    appear = np.zeros((n, n), dtype=np.int64)
    wins = np.zeros((n, n), dtype=np.int64)
    for rk in profile.rankings:
        pos = rk.positions
        present = list(rk.items)
        for i in present:
            for j in present:
                if i == j:
                    continue
                appear[i, j] += 1
                if pos[i] < pos[j]:
                    wins[i, j] += 1
    return appear, wins


def brute_force_score(perm: tuple[int, ...], wins: np.ndarray) -> int:
    total = 0
    for a in range(len(perm)):
        for b in range(a + 1, len(perm)):
            total += int(wins[perm[a], perm[b]])
    return total


def windowed_oracle(wins_rel: np.ndarray, radius: int) -> tuple[list[int], int]:
    """Max score over sequences with |seq[t] - t| <= radius, lex-smallest winner."""
    n = wins_rel.shape[0]
    best_seq, best_score = None, -1
    for perm in itertools.permutations(range(n)):
        if all(abs(perm[t] - t) <= radius for t in range(n)):
            s = brute_force_score(perm, wins_rel)
            if s > best_score:
                best_seq, best_score = list(perm), s
    assert best_seq is not None
    return best_seq, best_score


def enumerate_window(n: int, radius: int) -> np.ndarray:
    """All sequences with |seq[t] - t| <= radius, lexicographic order."""
    rows = [
        perm
        for perm in itertools.permutations(range(n))
        if all(abs(perm[t] - t) <= radius for t in range(n))
    ]
    return np.array(rows, dtype=np.int64)


def random_incomplete_profile(n: int, r: int, stream: Stream, min_size: int = 2) -> SampleProfile:
    """Uniformly random incomplete rankings over random sets (not Mallows)."""
    sets = []
    rankings = []
    for ell in range(r):
        size = min_size + stream.below(n - min_size + 1)
        members = sorted(stream.permutation(n)[:size])
        order = list(members)
        stream.shuffle(order)
        sets.append(tuple(members))
        rankings.append(Ranking(order))
    return SampleProfile(rankings, SelectionSequence(sets, n))


def exact_pair_flip_probability(beta: float) -> float:
    return math.exp(-beta) / (1.0 + math.exp(-beta))


def argmax_set(values, keys) -> set:
    best = max(values)
    return {k for v, k in zip(values, keys) if v == best}
