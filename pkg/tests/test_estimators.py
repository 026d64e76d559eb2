import itertools
import math

import numpy as np
import pytest

import regression_pins
from helpers import argmax_set, random_incomplete_profile, recount_pairwise
from mallows_select.core import (
    MallowsParams,
    Ranking,
    SampleProfile,
    SelectionSequence,
    kendall_tau,
    log_partition_function,
    restrict,
)
from mallows_select.estimators import (
    accumulate_counts,
    brute_force_mle,
    exact_two_item_success,
    log_likelihood,
    positional_estimator,
    score,
    score_permutation_array,
    top_k,
    total_distance,
)
from mallows_select.experiments import run_trial
from mallows_select.rng import Stream
from mallows_select.sampling import SelectionSpec, generate_selection, sample_profile


def complete_profile(rank_tuples, n):
    sel = SelectionSequence([tuple(range(n))] * len(rank_tuples), n)
    return SampleProfile([Ranking(t) for t in rank_tuples], sel)


class TestAccumulateCounts:
    def test_empty_profile(self):
        counts = accumulate_counts(SampleProfile([], SelectionSequence([], n=4)))
        assert counts.appear.sum() == 0 and counts.wins.sum() == 0

    def test_two_opposite_pair_samples(self):
        sel = SelectionSequence([(0, 1), (0, 1)], n=2)
        profile = SampleProfile([Ranking([0, 1]), Ranking([1, 0])], sel)
        counts = accumulate_counts(profile)
        assert counts.appear[0, 1] == 2
        assert counts.wins[0, 1] == 1 and counts.wins[1, 0] == 1

    def test_matches_independent_recount(self):
        stream = Stream.from_seed(100)
        for trial in range(20):
            profile = random_incomplete_profile(n=4 + stream.below(4), r=6, stream=stream)
            counts = accumulate_counts(profile)
            appear, wins = recount_pairwise(profile)
            assert (counts.appear == appear).all()
            assert (counts.wins == wins).all()
            counts.validate()

    def test_total_comparisons_invariant(self):
        stream = Stream.from_seed(101)
        profile = random_incomplete_profile(n=7, r=12, stream=stream)
        counts = accumulate_counts(profile)
        expected = sum(len(s) * (len(s) - 1) // 2 for s in profile.selection)
        assert counts.wins.sum() == expected
        assert counts.appear.sum() == 2 * expected


class TestPositionalEstimator:
    def test_unanimous_profile(self):
        center = (3, 0, 2, 1)
        profile = complete_profile([center] * 5, 4)
        result = positional_estimator(profile, Stream.from_seed(0))
        assert result.ranking.items == center
        assert result.raw_scores == (1, 3, 2, 0)  # raw score = position in center
        assert result.tie_groups == ()

    def test_hand_counted_majorities(self):
        profile = complete_profile([(0, 1, 2), (0, 1, 2), (1, 0, 2)], 3)
        result = positional_estimator(profile, Stream.from_seed(0))
        assert result.raw_scores == (0, 1, 2)
        assert result.ranking.items == (0, 1, 2)

    def test_single_decisive_pair(self):
        sel = SelectionSequence([(0, 1)], n=2)
        profile = SampleProfile([Ranking([1, 0])], sel)
        result = positional_estimator(profile, Stream.from_seed(0))
        assert result.raw_scores == (1, 0)
        assert result.ranking.items == (1, 0)

    def test_half_split_increments_both(self):
        sel = SelectionSequence([(0, 1), (0, 1)], n=2)
        profile = SampleProfile([Ranking([0, 1]), Ranking([1, 0])], sel)
        result = positional_estimator(profile, Stream.from_seed(5))
        assert result.raw_scores == (1, 1)
        assert result.tie_groups == ((0, 1),)

    def test_never_observed_alternative_sinks_and_is_flagged(self):
        sel = SelectionSequence([(0, 1)] * 3, n=3)
        profile = SampleProfile([Ranking([0, 1])] * 3, sel)
        result = positional_estimator(profile, Stream.from_seed(1))
        assert result.never_observed == (2,)
        assert result.raw_scores[2] == 2  # loses every ignorance comparison
        # pairs (0,2) and (1,2) never co-appear
        assert set(result.zero_pairs) == {(0, 2), (1, 2)}

    def test_tie_break_uses_stream(self):
        sel = SelectionSequence([(0, 1), (0, 1)], n=2)
        profile = SampleProfile([Ranking([0, 1]), Ranking([1, 0])], sel)
        outcomes = {
            positional_estimator(profile, Stream.from_seed(s)).ranking.items for s in range(30)
        }
        assert outcomes == {(0, 1), (1, 0)}

    def test_empty_profile_rejected(self):
        with pytest.raises(ValueError):
            positional_estimator(SampleProfile([], SelectionSequence([], n=3)), Stream.from_seed(0))

    def test_relabeling_equivariance_on_tie_free_instance(self):
        stream = Stream.from_seed(55)
        n = 6
        center = Ranking(range(n))
        params = MallowsParams(center, 3.0)
        sel = generate_selection(SelectionSpec(kind="complete", n=n), 21)
        profile = sample_profile(params, sel, stream)
        base = positional_estimator(profile, Stream.from_seed(9))
        assert not base.tie_groups  # instance chosen tie-free
        rho = Stream.from_seed(56).permutation(n)
        relabeled = SampleProfile(
            [Ranking(tuple(rho[x] for x in rk.items)) for rk in profile.rankings],
            SelectionSequence([tuple(sorted(rho[x] for x in s)) for s in sel.sets], n),
        )
        mapped = positional_estimator(relabeled, Stream.from_seed(9))
        assert mapped.ranking.items == tuple(rho[x] for x in base.ranking.items)

    def test_position_deviation_regression_pin(self):
        pin = regression_pins.POSITION_DEVIATION
        root = Stream.from_seed(pin["seed"])
        bad = 0
        for t in range(pin["trials"]):
            est, pi0 = run_trial(
                pin["n"], pin["beta"], pin["p"], pin["r"], "mixed_pfrequent", root.child(t)
            )
            pos_est, pos0 = est.positions, pi0.positions
            dev = max(abs(pos_est[i] - pos0[i]) for i in range(pin["n"]))
            bad += dev > pin["deviation_bound"]
        assert bad <= pin["max_fail_fraction"] * pin["trials"]


class TestScore:
    def test_zero_counts(self):
        counts = accumulate_counts(SampleProfile([], SelectionSequence([], n=4)))
        for perm in itertools.permutations(range(4)):
            assert score(Ranking(perm), counts) == 0

    def test_single_pair(self):
        sel = SelectionSequence([(0, 1)] * 4, n=2)
        profile = SampleProfile(
            [Ranking([0, 1]), Ranking([0, 1]), Ranking([0, 1]), Ranking([1, 0])], sel
        )
        counts = accumulate_counts(profile)
        assert score(Ranking([0, 1]), counts) == 3
        assert score(Ranking([1, 0]), counts) == 1

    def test_score_plus_reverse_is_total_appearances(self):
        stream = Stream.from_seed(200)
        profile = random_incomplete_profile(n=6, r=10, stream=stream)
        counts = accumulate_counts(profile)
        half = counts.appear[np.triu_indices(6, 1)].sum()
        for _ in range(10):
            pi = Ranking(stream.permutation(6))
            rev = Ranking(tuple(reversed(pi.items)))
            assert score(pi, counts) + score(rev, counts) == half

    def test_vectorized_scores_match_scalar(self):
        stream = Stream.from_seed(201)
        profile = random_incomplete_profile(n=5, r=8, stream=stream)
        counts = accumulate_counts(profile)
        perms = np.array(list(itertools.permutations(range(5))), dtype=np.int64)
        vec = score_permutation_array(perms, counts)
        for row, s in zip(perms, vec):
            assert score(Ranking(row.tolist()), counts) == s


class TestLemmaOneEquivalence:
    def test_score_and_likelihood_argmax_sets_coincide(self):
        stream = Stream.from_seed(300)
        checked = 0
        for n in (3, 4, 5):
            perms = [Ranking(p) for p in itertools.permutations(range(n))]
            for _ in range(25):
                profile = random_incomplete_profile(n=n, r=1 + stream.below(8), stream=stream)
                counts = accumulate_counts(profile)
                scores = [score(pi, counts) for pi in perms]
                dists = [total_distance(pi, profile) for pi in perms]
                keys = [pi.items for pi in perms]
                # likelihood is a strictly decreasing function of total distance
                assert argmax_set(scores, keys) == argmax_set([-d for d in dists], keys)
                checked += 1
        assert checked == 75

    def test_float_log_likelihood_orders_like_score(self):
        stream = Stream.from_seed(301)
        profile = random_incomplete_profile(n=5, r=6, stream=stream)
        counts = accumulate_counts(profile)
        beta = 0.8
        for _ in range(30):
            a = Ranking(stream.permutation(5))
            b = Ranking(stream.permutation(5))
            sa, sb = score(a, counts), score(b, counts)
            la, lb = log_likelihood(a, profile, beta), log_likelihood(b, profile, beta)
            if sa > sb:
                assert la > lb
            elif sa < sb:
                assert la < lb
            else:
                assert la == pytest.approx(lb, abs=1e-9)


class TestLogLikelihood:
    def test_maximum_at_zero_distances(self):
        center = Ranking([2, 0, 1, 3])
        sel = generate_selection(SelectionSpec(kind="mixed_pfrequent", n=4, p=0.5), 6)
        profile = SampleProfile([restrict(center, s) for s in sel.sets], sel)
        beta = 1.1
        expected = -sum(log_partition_function(len(s), beta) for s in sel.sets)
        assert log_likelihood(center, profile, beta) == pytest.approx(expected, rel=1e-12)

    def test_one_inverted_pair_costs_beta(self):
        beta = 0.9
        sel = SelectionSequence([(0, 1)], n=2)
        profile = SampleProfile([Ranking([0, 1])], sel)
        delta = log_likelihood(Ranking([0, 1]), profile, beta) - log_likelihood(Ranking([1, 0]), profile, beta)
        assert delta == pytest.approx(beta, rel=1e-12)

    def test_rejects_nonpositive_beta(self):
        profile = complete_profile([(0, 1)], 2)
        with pytest.raises(ValueError):
            log_likelihood(Ranking([0, 1]), profile, 0.0)


class TestBruteForce:
    def test_unanimous(self):
        profile = complete_profile([(2, 1, 0)] * 3, 3)
        assert brute_force_mle(profile).items == (2, 1, 0)

    def test_restrict_to_singleton(self):
        profile = complete_profile([(0, 1, 2)], 3)
        pinned = Ranking([2, 1, 0])
        assert brute_force_mle(profile, restrict_to=[pinned]) == pinned

    def test_guard_on_large_n(self):
        sel = SelectionSequence([tuple(range(11))], n=11)
        profile = SampleProfile([Ranking(range(11))], sel)
        with pytest.raises(ValueError, match="n <= 10"):
            brute_force_mle(profile)

    def test_lexicographic_tie_break(self):
        # no information at all: every ranking scores 0, smallest wins
        sel = SelectionSequence([(0, 1)], n=3)
        profile = SampleProfile([Ranking([0, 1])], sel)
        result = brute_force_mle(profile)
        assert result.items == (0, 1, 2)

    def test_matches_exhaustive_maximum(self):
        stream = Stream.from_seed(400)
        for _ in range(10):
            profile = random_incomplete_profile(n=5, r=7, stream=stream)
            counts = accumulate_counts(profile)
            best = max(
                (score(Ranking(p), counts), p) for p in itertools.permutations(range(5))
            )
            got = brute_force_mle(profile)
            assert score(got, counts) == best[0]


class TestTopK:
    def test_full_prefix_is_identity(self):
        pi = Ranking([4, 2, 0, 3, 1])
        assert top_k(pi, 5) == pi

    def test_prefix(self):
        assert top_k(Ranking([4, 2, 0, 3, 1]), 2).items == (4, 2)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            top_k(Ranking([0, 1]), 3)
        with pytest.raises(ValueError):
            top_k(Ranking([0, 1]), 0)


class TestMonotonicity:
    def test_mean_distance_drops_with_more_samples(self):
        pin = regression_pins.MONOTONICITY
        root = Stream.from_seed(pin["seed"])
        p = 0.5
        means = {}
        for r in (pin["r_small"], pin["r_large"]):
            dists = []
            for t in range(50):
                est, pi0 = run_trial(pin["n"], pin["beta"], p, r, "mixed_pfrequent", root.child(r, t))
                dists.append(kendall_tau(est, pi0))
            means[r] = np.mean(dists)
        assert means[pin["r_large"]] < means[pin["r_small"]] - 2.0


class TestClosedFormTwoItems:
    def test_formula_matches_direct_enumeration(self):
        for r in (1, 2, 3, 6, 15):
            beta = 2.0
            q = 1 / (1 + math.exp(-beta))
            direct = 0.0
            for w in range(r + 1):
                prob = math.comb(r, w) * q**w * (1 - q) ** (r - w)
                if 2 * w > r:
                    direct += prob
                elif 2 * w == r:
                    direct += prob / 2
            assert exact_two_item_success(r, beta) == pytest.approx(direct, rel=1e-12)
