"""Pairwise-count accumulation, the positional estimator, and likelihood scoring.

The positional estimator ranks alternative i by the number of opponents j
that precede i in at least half of the samples where both appear.  The
majority test is the integer comparison ``2 * wins[j][i] >= appear[i][j]``:
an exact half split increments both sides, and a pair that never co-appears
also increments both sides, encoding total ignorance.  Ties in the
resulting scores are broken uniformly at random from the caller's stream.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    Ranking,
    SampleProfile,
    kendall_tau_incomplete,
    log_partition_function,
)
from .rng import Stream
from .sampling import _triu_pairs


@dataclass(frozen=True)
class PairwiseCounts:
    """Per-ordered-pair tallies accumulated from a profile.

    appear[i][j] counts samples containing both i and j (symmetric, zero
    diagonal); wins[i][j] counts samples where i precedes j.
    """

    n: int
    appear: np.ndarray
    wins: np.ndarray

    def validate(self) -> None:
        assert self.appear.shape == (self.n, self.n) and self.wins.shape == (self.n, self.n)
        assert (np.diag(self.appear) == 0).all() and (np.diag(self.wins) == 0).all()
        assert (self.appear == self.appear.T).all()
        assert (self.wins + self.wins.T == self.appear).all()


def accumulate_counts(profile: SampleProfile) -> PairwiseCounts:
    """Tally appearances and precedences in one pass over the profile."""
    n = profile.n
    wins = np.zeros((n, n), dtype=np.int64)
    complete_rows = []
    pair_first: list[np.ndarray] = []
    pair_second: list[np.ndarray] = []
    for rk in profile.rankings:
        m = len(rk.items)
        its = np.fromiter(rk.items, dtype=np.int64, count=m)
        if m == n:
            pos = np.empty(n, dtype=np.int64)
            pos[its] = np.arange(n)
            complete_rows.append(pos)
        else:
            a, b = _triu_pairs(m)
            pair_first.append(its[a])
            pair_second.append(its[b])
    if complete_rows:
        P = np.stack(complete_rows)
        for lo in range(0, len(P), 4096):  # bound the temporary boolean block
            block = P[lo : lo + 4096]
            wins += (block[:, :, None] < block[:, None, :]).sum(axis=0, dtype=np.int64)
    if pair_first:
        np.add.at(wins, (np.concatenate(pair_first), np.concatenate(pair_second)), 1)
    return PairwiseCounts(n=n, appear=wins + wins.T, wins=wins)


def positional_scores(counts: PairwiseCounts) -> np.ndarray:
    """Raw positional score per alternative, before tie-breaking."""
    beaten = 2 * counts.wins.T >= counts.appear
    np.fill_diagonal(beaten, False)
    return beaten.sum(axis=1)


@dataclass(frozen=True)
class PosEstResult:
    """Output of the positional estimator with tie and coverage diagnostics."""

    ranking: Ranking
    raw_scores: tuple[int, ...]
    tie_groups: tuple[tuple[int, ...], ...]
    zero_pairs: tuple[tuple[int, int], ...]
    never_observed: tuple[int, ...]

    def diagnostics(self) -> dict:
        return {
            "tie_groups": [list(g) for g in self.tie_groups],
            "zero_appearance_pairs": [list(p) for p in self.zero_pairs],
            "never_observed": list(self.never_observed),
        }


def positional_estimator(profile: SampleProfile, stream: Stream) -> PosEstResult:
    """Rank alternatives by majority-defeat counts, ties uniformly at random.

    An alternative that never appears in the profile loses every ignorance
    comparison, lands at raw score n-1, and is flagged in the result.
    """
    if len(profile) == 0:
        raise ValueError("positional estimator requires a nonempty profile")
    counts = accumulate_counts(profile)
    return positional_estimator_from_counts(counts, stream)


def positional_estimator_from_counts(counts: PairwiseCounts, stream: Stream) -> PosEstResult:
    n = counts.n
    raw = positional_scores(counts)
    order: list[int] = []
    tie_groups: list[tuple[int, ...]] = []
    by_score: dict[int, list[int]] = {}
    for i, s in enumerate(raw.tolist()):
        by_score.setdefault(s, []).append(i)
    for s in sorted(by_score):
        group = by_score[s]
        if len(group) > 1:
            tie_groups.append(tuple(group))
            stream.shuffle(group)
        order.extend(group)
    ai, bj = _triu_pairs(n)
    zero = counts.appear[ai, bj] == 0
    zero_pairs = tuple((int(a), int(b)) for a, b in zip(ai[zero], bj[zero]))
    never = tuple(int(i) for i in np.flatnonzero(counts.appear.sum(axis=1) == 0))
    return PosEstResult(
        ranking=Ranking(order, validate=False),
        raw_scores=tuple(raw.tolist()),
        tie_groups=tuple(tie_groups),
        zero_pairs=zero_pairs,
        never_observed=never,
    )


def score(pi: Ranking, counts: PairwiseCounts) -> int:
    """Total pairwise agreements between ``pi`` and the tallied samples.

    Sum over ordered pairs (i, j) with i before j in ``pi`` of wins[i][j].
    Maximizing this over complete rankings is equivalent to maximizing the
    profile likelihood at any spread parameter.
    """
    its = np.fromiter(pi.items, dtype=np.int64, count=len(pi.items))
    a, b = _triu_pairs(len(its))
    return int(counts.wins[its[a], its[b]].sum())


def score_permutation_array(perms: np.ndarray, counts: PairwiseCounts) -> np.ndarray:
    """Scores of many complete rankings at once; perms has shape (k, n)."""
    k, n = perms.shape
    a, b = _triu_pairs(n)
    return counts.wins[perms[:, a], perms[:, b]].sum(axis=1)


def log_likelihood(pi: Ranking, profile: SampleProfile, beta: float) -> float:
    """Log-probability of the profile under center ``pi`` and spread ``beta``."""
    if beta <= 0:
        raise ValueError("spread parameter beta must be positive")
    total = 0.0
    for rk in profile.rankings:
        total -= beta * kendall_tau_incomplete(pi, rk)
        total -= log_partition_function(len(rk.items), beta)
    return total


def total_distance(pi: Ranking, profile: SampleProfile) -> int:
    """Sum of generalized Kendall tau distances from ``pi`` to every sample."""
    return sum(kendall_tau_incomplete(pi, rk) for rk in profile.rankings)


_BRUTE_FORCE_LIMIT = 10


@lru_cache(maxsize=8)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def brute_force_mle(profile: SampleProfile, restrict_to=None) -> Ranking:
    """Exact maximum likelihood ranking by enumeration.

    Enumerates all n! complete rankings (guarded to n <= 10) or the given
    candidate set; ties go to the lexicographically smallest item sequence.
    """
    n = profile.n
    counts = accumulate_counts(profile)
    if restrict_to is None:
        if n > _BRUTE_FORCE_LIMIT:
            raise ValueError(f"brute force over {n}! rankings refused; pass restrict_to or keep n <= {_BRUTE_FORCE_LIMIT}")
        perms = _all_permutations(n)
        scores = score_permutation_array(perms, counts)
        return Ranking(perms[int(np.argmax(scores))].tolist(), validate=False)
    best: Ranking | None = None
    best_score = -1
    for cand in sorted(restrict_to, key=lambda r: r.items):
        s = score(cand, counts)
        if s > best_score:
            best, best_score = cand, s
    if best is None:
        raise ValueError("empty candidate set")
    return best


def top_k(pi: Ranking, k: int) -> Ranking:
    """The length-k prefix of a complete ranking."""
    if not 1 <= k <= len(pi.items):
        raise ValueError(f"k must lie in [1, {len(pi.items)}], got {k}")
    return Ranking(pi.items[:k], validate=False)


def exact_two_item_success(r: int, beta: float) -> float:
    """Closed-form exact-recovery probability for n = 2 and r complete samples.

    The correct order wins each sample with probability 1/(1+e^{-beta});
    recovery succeeds on a strict majority and on half the exact splits.
    """
    q = 1.0 / (1.0 + math.exp(-beta))
    pmf = [math.comb(r, w) * q**w * (1 - q) ** (r - w) for w in range(r + 1)]
    success = sum(pmf[w] for w in range(r + 1) if 2 * w > r)
    if r % 2 == 0:
        success += 0.5 * pmf[r // 2]
    return success
