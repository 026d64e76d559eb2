import itertools

import numpy as np
import pytest

import regression_pins
from helpers import enumerate_window, random_incomplete_profile, windowed_oracle
from mallows_select.core import MallowsParams, Ranking, pointwise_distance
from mallows_select.estimators import (
    PairwiseCounts,
    accumulate_counts,
    brute_force_mle,
    positional_estimator,
    score,
    score_permutation_array,
)
from mallows_select.mle import (
    BoundaryTouchError,
    BudgetExceededError,
    DpConfig,
    dp_maximize,
    mle_window,
    pointwise_window,
    recover_likelier_than_nature,
    recover_mle,
)
from mallows_select.rng import Stream
from mallows_select.sampling import SelectionSpec, generate_selection, sample_profile


def random_counts(n: int, rng: np.random.Generator, hi: int = 6) -> PairwiseCounts:
    wins = rng.integers(0, hi, size=(n, n)).astype(np.int64)
    np.fill_diagonal(wins, 0)
    return PairwiseCounts(n=n, appear=wins + wins.T, wins=wins)


class TestDpMaximize:
    def test_radius_zero_returns_anchor(self):
        rng = np.random.default_rng(1)
        counts = random_counts(6, rng)
        anchor = Ranking([3, 1, 5, 0, 2, 4])
        for policy in ("error", "widen"):
            out = dp_maximize(counts, DpConfig(radius=0, anchor=anchor, boundary_policy=policy))
            assert out == anchor

    def test_full_radius_equals_brute_force(self):
        rng = np.random.default_rng(2)
        stream = Stream.from_seed(500)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            profile = random_incomplete_profile(n=n, r=6, stream=stream)
            counts = accumulate_counts(profile)
            anchor = Ranking.identity(n)  # identity anchor aligns both tie-break orders
            out = dp_maximize(counts, DpConfig(radius=n - 1, anchor=anchor, boundary_policy="widen"))
            assert out == brute_force_mle(profile)

    def test_windowed_oracle_exact_with_random_anchors(self):
        rng = np.random.default_rng(3)
        for trial in range(40):
            n = int(rng.integers(3, 8))
            radius = int(rng.integers(0, 3))
            counts = random_counts(n, rng)
            anchor = Ranking(tuple(rng.permutation(n).tolist()))
            items = np.fromiter(anchor.items, dtype=np.int64)
            wins_rel = counts.wins[np.ix_(items, items)]
            oracle_seq, oracle_score = windowed_oracle(wins_rel, radius)
            try:
                out = dp_maximize(counts, DpConfig(radius=radius, anchor=anchor))
            except BoundaryTouchError as exc:
                out = exc.result  # the exact windowed optimum travels on the error
                assert exc.score == oracle_score
            assert out.items == tuple(anchor.items[e] for e in oracle_seq)
            assert score(out, counts) == oracle_score

    def test_score_nondecreasing_in_radius_and_stabilizes(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n = 7
            counts = random_counts(n, rng)
            anchor = Ranking.identity(n)
            prev = -1
            for radius in range(n):
                try:
                    out = dp_maximize(counts, DpConfig(radius=radius, anchor=anchor))
                    s = score(out, counts)
                except BoundaryTouchError as exc:
                    s = exc.score
                assert s >= prev
                assert s == score_permutation_array(enumerate_window(n, radius), counts).max()
                prev = s
            full = score(brute_force_mle_from_counts(counts), counts)
            assert prev == full


    def test_feasibility_within_final_radius(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = 6
            counts = random_counts(n, rng)
            anchor = Ranking(tuple(rng.permutation(n).tolist()))
            radius = int(rng.integers(0, n))
            try:
                out = dp_maximize(counts, DpConfig(radius=radius, anchor=anchor))
                assert pointwise_distance(out, anchor) <= radius
            except BoundaryTouchError:
                pass

    def test_boundary_touch_detected_and_widened(self):
        # the last element strongly prefers to lead, so every small window
        # pushes it to the window edge until widening reaches the full space
        n = 5
        wins = np.zeros((n, n), dtype=np.int64)
        wins[4, :4] = 10
        counts = PairwiseCounts(n=n, appear=wins + wins.T, wins=wins)
        anchor = Ranking.identity(n)
        with pytest.raises(BoundaryTouchError, match="truncating"):
            dp_maximize(counts, DpConfig(radius=1, anchor=anchor, boundary_policy="error"))
        widened = dp_maximize(counts, DpConfig(radius=1, anchor=anchor, boundary_policy="widen"))
        assert widened.items[0] == 4

    def test_budget_error_names_minimum(self):
        counts = random_counts(30, np.random.default_rng(6))
        anchor = Ranking.identity(30)
        with pytest.raises(BudgetExceededError, match=str(1 << 23)):
            dp_maximize(counts, DpConfig(radius=11, anchor=anchor))

    def test_anchor_must_cover_counts(self):
        counts = random_counts(4, np.random.default_rng(7))
        with pytest.raises(ValueError):
            dp_maximize(counts, DpConfig(radius=1, anchor=Ranking([0, 1, 2])))


def brute_force_mle_from_counts(counts: PairwiseCounts) -> Ranking:
    perms = np.array(list(itertools.permutations(range(counts.n))), dtype=np.int64)
    scores = score_permutation_array(perms, counts)
    return Ranking(perms[int(np.argmax(scores))].tolist())


class TestWindowFormulas:
    def test_positive_and_shrinking_in_r(self):
        values = [pointwise_window(20, 2.0, 0.5, r) for r in (1, 10, 100, 10000)]
        assert all(v >= 1 for v in values)
        assert values == sorted(values, reverse=True)

    def test_mle_window_dominates(self):
        for r in (1, 5, 50):
            assert mle_window(20, 1.0, 0.5, r) > pointwise_window(20, 1.0, 0.5, r)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            pointwise_window(10, 0.0, 0.5, 5)
        with pytest.raises(ValueError):
            mle_window(10, 1.0, 0.0, 5)


class TestRecoveryPipelines:
    def test_noiseless_recovers_center(self):
        stream = Stream.from_seed(600)
        center = Ranking(stream.permutation(9))
        params = MallowsParams(center, 50.0)
        sel = generate_selection(SelectionSpec(kind="mixed_pfrequent", n=9, p=0.5), 30)
        profile = sample_profile(params, sel, stream.child(1))
        for recover in (recover_likelier_than_nature, recover_mle):
            report = recover(profile, 50.0, 0.5, stream=stream.child(2))
            assert report.result == center

    def test_report_is_consistent(self):
        stream = Stream.from_seed(601)
        center = Ranking(stream.permutation(8))
        profile = sample_profile(
            MallowsParams(center, 1.0),
            generate_selection(SelectionSpec(kind="mixed_pfrequent", n=8, p=0.5), 6),
            stream.child(1),
        )
        report = recover_mle(profile, 1.0, 0.5, stream=stream.child(2))
        counts = accumulate_counts(profile)
        assert report.score_achieved == score(report.result, counts)
        assert report.mode == "maximum_likelihood"
        assert report.window_used >= 1
        d = report.as_dict()
        assert d["ranking"] == list(report.result.items)

    def test_result_dominates_positional_anchor(self):
        stream = Stream.from_seed(602)
        for t in range(30):
            n = 5 + stream.below(4)
            center = Ranking(stream.child(t, 0).permutation(n))
            sel = generate_selection(SelectionSpec(kind="mixed_pfrequent", n=n, p=0.5), 4)
            profile = sample_profile(MallowsParams(center, 0.7), sel, stream.child(t, 1))
            counts = accumulate_counts(profile)
            anchor = positional_estimator(profile, Stream.from_seed(9000 + t)).ranking
            report = recover_likelier_than_nature(profile, 0.7, 0.5, stream=Stream.from_seed(9000 + t))
            assert report.score_achieved >= score(anchor, counts)

    def test_likelier_than_nature_contract(self):
        pin = regression_pins.LTN_CONTRACT
        root = Stream.from_seed(pin["seed"])
        sel = generate_selection(SelectionSpec(kind="complete", n=pin["n"]), pin["r"])
        wins = 0
        for t in range(pin["trials"]):
            center = Ranking(root.child(t, 0).permutation(pin["n"]))
            profile = sample_profile(MallowsParams(center, pin["beta"]), sel, root.child(t, 1))
            counts = accumulate_counts(profile)
            report = recover_likelier_than_nature(
                profile, pin["beta"], pin["p"], stream=root.child(t, 2)
            )
            wins += report.score_achieved >= score(center, counts)
        assert wins >= pin["min_successes"]

    def test_single_complete_sample_is_its_own_mle(self):
        stream = Stream.from_seed(603)
        sample = Ranking(stream.permutation(7))
        sel = generate_selection(SelectionSpec(kind="complete", n=7), 1)
        profile = sample_profile(MallowsParams(sample, 80.0), sel, stream.child(1))
        # at this spread the sample equals the center
        assert profile.rankings[0] == sample
        report = recover_mle(profile, 1.0, 1.0, stream=stream.child(2))
        assert report.result == sample

    def test_budget_exhaustion_mentions_remedy(self):
        stream = Stream.from_seed(604)
        center = Ranking(stream.permutation(8))
        sel = generate_selection(SelectionSpec(kind="mixed_pfrequent", n=8, p=0.5), 4)
        profile = sample_profile(MallowsParams(center, 0.5), sel, stream.child(1))
        with pytest.raises(BudgetExceededError, match="budget"):
            recover_mle(profile, 0.5, 0.5, stream=stream.child(2), budget=16)

    def test_radius_override_respected(self):
        stream = Stream.from_seed(605)
        center = Ranking(stream.permutation(8))
        sel = generate_selection(SelectionSpec(kind="complete", n=8), 10)
        profile = sample_profile(MallowsParams(center, 2.0), sel, stream.child(1))
        report = recover_mle(profile, 2.0, 1.0, stream=stream.child(2), radius_override=1)
        assert report.window_used >= 1

    def test_report_likelihood_ordering_matches_score_ordering(self):
        stream = Stream.from_seed(607)
        for t in range(15):
            center = Ranking(stream.child(t, 0).permutation(7))
            sel = generate_selection(SelectionSpec(kind="mixed_pfrequent", n=7, p=0.5), 5)
            profile = sample_profile(MallowsParams(center, 0.8), sel, stream.child(t, 1))
            ltn = recover_likelier_than_nature(profile, 0.8, 0.5, stream=stream.child(t, 2))
            mle = recover_mle(profile, 0.8, 0.5, stream=stream.child(t, 3))
            if ltn.score_achieved < mle.score_achieved:
                assert ltn.log_likelihood < mle.log_likelihood
            elif ltn.score_achieved > mle.score_achieved:
                assert ltn.log_likelihood > mle.log_likelihood
            else:
                assert ltn.log_likelihood == pytest.approx(mle.log_likelihood, abs=1e-9)

    def test_pairwise_only_regime_matches_oracle(self):
        # every pair observed exactly once
        stream = Stream.from_seed(606)
        n = 6
        r = n * (n - 1) // 2
        sel = generate_selection(SelectionSpec(kind="pairwise", n=n), r)
        for t in range(10):
            center = Ranking(stream.child(t, 0).permutation(n))
            profile = sample_profile(MallowsParams(center, 1.0), sel, stream.child(t, 1))
            counts = accumulate_counts(profile)
            report = recover_mle(profile, 1.0, 2 / (n * (n - 1)), stream=stream.child(t, 2))
            assert report.score_achieved == score(brute_force_mle_from_counts(counts), counts)
