"""Monte-Carlo harness: sample-complexity search, distance curves, top-k, adversarial demo.

Protocol shared by all experiments: every trial draws a fresh uniformly
random central ranking, samples a profile on its selection sequence, runs
the selected estimator, and records the outcome.  Each trial's randomness
comes from a substream keyed by (seed, experiment id, probe coordinates,
trial index), so aggregate results are byte-identical regardless of how
trials are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .core import MallowsParams, Ranking, kendall_tau
from .estimators import positional_estimator
from .mle import recover_likelier_than_nature, recover_mle
from .rng import Stream
from .sampling import SelectionSpec, generate_selection, sample_profile

_EXP_COMPLEXITY = 1
_EXP_DISTANCE = 2
_EXP_TOPK = 3
_EXP_ADVERSARIAL = 4

_DETERMINISTIC_KINDS = ("complete", "pairwise", "mixed_pfrequent", "adversarial_matching")


class SearchCapError(RuntimeError):
    """The doubling phase of a binary search hit the profile-size cap."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameterization of one Monte-Carlo run."""

    n: int
    beta: float
    p_values: tuple[float, ...] = (1.0,)
    target_success: float = 0.95
    trials_per_point: int = 100
    searches: int = 100
    r_grid: tuple[int, ...] | None = None
    k: int | None = None
    selection_kind: str = "mixed_pfrequent"
    seed: int = 0
    max_r: int = 4096
    estimator: str = "posest"

    def __post_init__(self):
        if not (0.0 < self.target_success < 1.0):
            raise ValueError("target success rate must lie in (0, 1)")
        if self.trials_per_point < 1 or self.searches < 1:
            raise ValueError("trials and searches must be positive")
        if self.estimator not in ("posest", "ltn", "mle"):
            raise ValueError("estimator must be one of posest, ltn, mle")
        if self.r_grid is not None and sorted(set(self.r_grid)) != list(self.r_grid):
            raise ValueError("r_grid must be strictly increasing")

    def metadata(self) -> dict:
        return asdict(self)


def preset(name: str) -> ExperimentConfig:
    """Named experiment parameterizations reproduced by the CLI."""
    if name == "figure1":
        return ExperimentConfig(
            n=20, beta=2.0,
            p_values=(1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6),
            target_success=0.95, trials_per_point=100, searches=100,
            selection_kind="mixed_pfrequent",
        )
    if name == "figure2":
        return ExperimentConfig(
            n=20, beta=0.3,
            p_values=(0.2, 0.5, 1.0),
            trials_per_point=100,
            r_grid=tuple(range(10, 101, 10)),
            selection_kind="mixed_pfrequent",
        )
    if name == "figure3":
        return ExperimentConfig(
            n=20, beta=2.0,
            p_values=(1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6),
            target_success=0.95, trials_per_point=100, searches=50,
            selection_kind="bernoulli_random",
        )
    raise ValueError(f"unknown preset {name!r}; available: figure1, figure2, figure3")


@lru_cache(maxsize=4096)
def _cached_selection(kind: str, n: int, p: float, r: int):
    return generate_selection(SelectionSpec(kind=kind, n=n, p=p), r)


def _trial_selection(kind: str, n: int, p: float, r: int, trial_stream: Stream):
    if kind in _DETERMINISTIC_KINDS:
        return _cached_selection(kind, n, p, r)
    return generate_selection(SelectionSpec(kind=kind, n=n, p=p), r, trial_stream.child(1))


def _estimate(profile, beta: float, p: float, estimator: str, stream: Stream) -> Ranking:
    if estimator == "posest":
        return positional_estimator(profile, stream).ranking
    if estimator == "ltn":
        return recover_likelier_than_nature(profile, beta, p, stream=stream).result
    return recover_mle(profile, beta, p, stream=stream).result


def run_trial(
    n: int,
    beta: float,
    p: float,
    r: int,
    selection_kind: str,
    trial_stream: Stream,
    estimator: str = "posest",
    center: Ranking | None = None,
) -> tuple[Ranking, Ranking]:
    """One protocol trial; returns (estimate, true center)."""
    pi0 = center if center is not None else Ranking(trial_stream.child(0).permutation(n), validate=False)
    selection = _trial_selection(selection_kind, n, p, r, trial_stream)
    profile = sample_profile(MallowsParams(pi0, beta), selection, trial_stream.child(2))
    est = _estimate(profile, beta, p, estimator, trial_stream.child(3))
    return est, pi0


def estimate_success_rate(
    n: int,
    beta: float,
    p: float,
    r: int,
    trials: int,
    selection_kind: str,
    stream: Stream,
    estimator: str = "posest",
    match: str = "exact",
    k: int | None = None,
) -> float:
    """Fraction of trials whose estimate matches the (fresh random) center.

    ``match`` is "exact" for full recovery or "topk" (with k) for
    agreement of the identities and order of the first k alternatives.
    """
    if r < 1:
        raise ValueError("profile size r must be at least 1")
    if match not in ("exact", "topk"):
        raise ValueError("match must be 'exact' or 'topk'")
    if match == "topk" and not (k and 1 <= k <= n):
        raise ValueError("topk matching requires 1 <= k <= n")
    hits = 0
    for t in range(trials):
        est, pi0 = run_trial(n, beta, p, r, selection_kind, stream.child(t), estimator)
        if match == "exact":
            hits += est.items == pi0.items
        else:
            hits += est.items[:k] == pi0.items[:k]
    return hits / trials


def binary_search_complexity(
    n: int,
    beta: float,
    p: float,
    target_success: float,
    trials: int,
    selection_kind: str,
    stream: Stream,
    max_r: int = 4096,
    estimator: str = "posest",
    match: str = "exact",
    k: int | None = None,
    success_fn=None,
) -> int:
    """Smallest bracketed profile size whose empirical success meets the target.

    Doubles r from 1 until a probe succeeds, then bisects.  Every probe at
    a given r reuses the substream keyed by r, so a search is internally
    deterministic; dispersion comes from running independent searches.
    """

    def probe(r: int) -> float:
        if success_fn is not None:
            return success_fn(r)
        return estimate_success_rate(
            n, beta, p, r, trials, selection_kind, stream.child(r), estimator, match, k
        )

    r = 1
    while probe(r) < target_success:
        r *= 2
        if r > max_r:
            raise SearchCapError(
                f"no profile size up to the cap of {max_r} reached success {target_success}"
            )
    hi, lo = r, r // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid) >= target_success:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ComplexityCurve:
    """Mean estimated sample complexity per frequency parameter."""

    points: tuple[tuple[float, float, float, float], ...]  # (p, 1/p, mean_r*, std_r*)
    metadata: dict = field(compare=False)

    def to_csv(self) -> str:
        lines = _metadata_lines(self.metadata)
        lines.append("p,inv_p,mean_r_star,std_r_star,searches,trials")
        for p, inv_p, mean, std in self.points:
            lines.append(
                f"{_fmt(p)},{_fmt(inv_p)},{_fmt(mean)},{_fmt(std)},"
                f"{self.metadata['searches']},{self.metadata['trials_per_point']}"
            )
        return "\n".join(lines) + "\n"

    def to_svg(self) -> str:
        from .plotting import line_plot_svg

        xs = [pt[1] for pt in self.points]
        ys = [pt[2] for pt in self.points]
        return line_plot_svg(
            [("mean r*", xs, ys)],
            title=f"Estimated sample complexity, n={self.metadata['n']}, beta={_fmt(self.metadata['beta'])}",
            xlabel="1/p (inverse frequency parameter)",
            ylabel=f"profile size for {_fmt(self.metadata['target_success'])} success",
        )


@dataclass(frozen=True)
class DistanceCurve:
    """Average distance between estimate and center per (p, r) cell."""

    series: tuple[tuple[float, tuple[tuple[int, float, float], ...]], ...]  # p -> ((r, mean, std), ...)
    metadata: dict = field(compare=False)

    def to_csv(self) -> str:
        lines = _metadata_lines(self.metadata)
        lines.append("p,r,mean_kt,std_kt,trials")
        for p, rows in self.series:
            for r, mean, std in rows:
                lines.append(f"{_fmt(p)},{r},{_fmt(mean)},{_fmt(std)},{self.metadata['trials_per_point']}")
        return "\n".join(lines) + "\n"

    def to_svg(self) -> str:
        from .plotting import line_plot_svg

        series = [
            (f"p={_fmt(p)}", [float(row[0]) for row in rows], [row[1] for row in rows])
            for p, rows in self.series
        ]
        return line_plot_svg(
            series,
            title=f"Average Kendall tau distance to the center, n={self.metadata['n']}, beta={_fmt(self.metadata['beta'])}",
            xlabel="profile size r",
            ylabel="mean Kendall tau distance",
        )


@dataclass(frozen=True)
class TopkCurve:
    """Top-k and full recovery rates over the profile-size grid."""

    k: int
    rows: tuple[tuple[int, float, float], ...]  # (r, topk_success, full_success)
    metadata: dict = field(compare=False)

    def to_csv(self) -> str:
        lines = _metadata_lines(self.metadata)
        lines.append("k,r,topk_success,full_success,trials")
        for r, topk_rate, full_rate in self.rows:
            lines.append(f"{self.k},{r},{_fmt(topk_rate)},{_fmt(full_rate)},{self.metadata['trials_per_point']}")
        return "\n".join(lines) + "\n"

    def to_svg(self) -> str:
        from .plotting import line_plot_svg

        xs = [float(r) for r, _, _ in self.rows]
        return line_plot_svg(
            [
                (f"top-{self.k} recovery", xs, [t for _, t, _ in self.rows]),
                ("full recovery", xs, [f for _, _, f in self.rows]),
            ],
            title=f"Top-k vs full recovery, n={self.metadata['n']}, beta={_fmt(self.metadata['beta'])}",
            xlabel="profile size r",
            ylabel="success rate",
        )


@dataclass(frozen=True)
class AdversarialReport:
    """Estimator failure rates on starved vs benign selection sequences."""

    rows: tuple[tuple[str, int, float, int], ...]  # (regime, r, failure_rate, trials)
    metadata: dict = field(compare=False)

    def to_csv(self) -> str:
        lines = _metadata_lines(self.metadata)
        lines.append("regime,r,failure_rate,trials")
        for regime, r, rate, trials in self.rows:
            lines.append(f"{regime},{r},{_fmt(rate)},{trials}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _metadata_lines(meta: dict) -> list[str]:
    lines = []
    for key, value in meta.items():
        if isinstance(value, tuple):
            value = "|".join(_fmt(v) for v in value)
        lines.append(f"# {key}={_fmt(value)}")
    return lines


def _map_tasks(worker, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, len(tasks) // (threads * 4))
        return list(pool.map(worker, tasks, chunksize=chunk))


def _complexity_task(args) -> int:
    config, p_idx, search_idx = args
    stream = Stream.from_seed(config.seed).child(_EXP_COMPLEXITY, p_idx, search_idx)
    return binary_search_complexity(
        config.n,
        config.beta,
        config.p_values[p_idx],
        config.target_success,
        config.trials_per_point,
        config.selection_kind,
        stream,
        max_r=config.max_r,
        estimator=config.estimator,
    )


def run_complexity_experiment(config: ExperimentConfig, threads: int = 1) -> ComplexityCurve:
    """Average binary-search sample-complexity estimates per frequency p."""
    tasks = [(config, p_idx, s) for p_idx in range(len(config.p_values)) for s in range(config.searches)]
    results = _map_tasks(_complexity_task, tasks, threads)
    points = []
    for p_idx, p in enumerate(config.p_values):
        rs = np.array(results[p_idx * config.searches : (p_idx + 1) * config.searches], dtype=np.float64)
        points.append((p, 1.0 / p, float(rs.mean()), float(rs.std())))
    points.sort(key=lambda pt: -pt[0])
    return ComplexityCurve(points=tuple(points), metadata=config.metadata())


def distance_cell(config: ExperimentConfig, p_idx: int, r: int) -> np.ndarray:
    """Per-trial distances for one (p, r) cell of the distance experiment."""
    p = config.p_values[p_idx]
    root = Stream.from_seed(config.seed).child(_EXP_DISTANCE, p_idx, r)
    dists = np.empty(config.trials_per_point, dtype=np.int64)
    for t in range(config.trials_per_point):
        est, pi0 = run_trial(config.n, config.beta, p, r, config.selection_kind, root.child(t), config.estimator)
        dists[t] = kendall_tau(est, pi0)
    return dists


def _distance_task(args) -> tuple[float, float]:
    config, p_idx, r = args
    dists = distance_cell(config, p_idx, r).astype(np.float64)
    return float(dists.mean()), float(dists.std())


def run_distance_experiment(config: ExperimentConfig, threads: int = 1) -> DistanceCurve:
    """Mean Kendall tau distance between estimate and center over the r grid."""
    if not config.r_grid:
        raise ValueError("distance experiment requires a nonempty r_grid")
    tasks = [(config, p_idx, r) for p_idx in range(len(config.p_values)) for r in config.r_grid]
    results = _map_tasks(_distance_task, tasks, threads)
    series = []
    width = len(config.r_grid)
    for p_idx, p in enumerate(config.p_values):
        rows = tuple(
            (r, results[p_idx * width + r_idx][0], results[p_idx * width + r_idx][1])
            for r_idx, r in enumerate(config.r_grid)
        )
        series.append((p, rows))
    return DistanceCurve(series=tuple(series), metadata=config.metadata())


def _topk_task(args) -> tuple[float, float]:
    config, r = args
    p = config.p_values[0]
    root = Stream.from_seed(config.seed).child(_EXP_TOPK, r)
    topk_hits = 0
    full_hits = 0
    for t in range(config.trials_per_point):
        est, pi0 = run_trial(config.n, config.beta, p, r, config.selection_kind, root.child(t), config.estimator)
        topk_hits += est.items[: config.k] == pi0.items[: config.k]
        full_hits += est.items == pi0.items
    return topk_hits / config.trials_per_point, full_hits / config.trials_per_point


def run_topk_experiment(config: ExperimentConfig, threads: int = 1) -> TopkCurve:
    """Top-k vs full recovery rates side by side over the r grid."""
    if not config.r_grid:
        raise ValueError("top-k experiment requires a nonempty r_grid")
    if not (config.k and 1 <= config.k <= config.n):
        raise ValueError("top-k experiment requires 1 <= k <= n")
    tasks = [(config, r) for r in config.r_grid]
    results = _map_tasks(_topk_task, tasks, threads)
    rows = tuple((r, results[i][0], results[i][1]) for i, r in enumerate(config.r_grid))
    return TopkCurve(k=config.k, rows=rows, metadata=config.metadata())


def _adversarial_task(args) -> int:
    n, beta, p, r, regime, lo, hi, seed, kind = args
    root = Stream.from_seed(seed).child(_EXP_ADVERSARIAL, 0 if regime == "adversarial" else 1)
    failures = 0
    planted = Ranking.identity(n) if regime == "adversarial" else None
    for t in range(lo, hi):
        est, pi0 = run_trial(n, beta, p, r, kind, root.child(t), "posest", center=planted)
        failures += est.items != pi0.items
    return failures


def run_adversarial_demo(
    n: int,
    beta: float,
    p: float,
    r: int,
    trials: int,
    seed: int = 0,
    threads: int = 1,
) -> AdversarialReport:
    """Failure rate of the positional estimator on the starved matching sequence.

    The adversarial regime plants the center so the starved matching's
    pairs sit adjacent (the identity ranking), maximizing each pair's swap
    probability; the benign regime runs the standard protocol on the mixed
    p-frequent sequence at the same (p, r).
    """
    if n % 2 != 0:
        raise ValueError("the matching construction requires an even number of alternatives")
    rows = []
    chunk = max(1, math.ceil(trials / max(1, threads * 4)))
    for regime, kind in (("adversarial", "adversarial_matching"), ("mixed", "mixed_pfrequent")):
        tasks = [
            (n, beta, p, r, regime, lo, min(lo + chunk, trials), seed, kind)
            for lo in range(0, trials, chunk)
        ]
        failures = sum(_map_tasks(_adversarial_task, tasks, threads))
        rows.append((regime, r, failures / trials, trials))
    meta = {"n": n, "beta": beta, "p": p, "r": r, "trials": trials, "seed": seed}
    return AdversarialReport(rows=tuple(rows), metadata=meta)


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def bootstrap_mean_diff_lower(a, b, stream: Stream, level: float = 0.99, reps: int = 2000) -> float:
    """One-sided lower confidence bound for mean(a) - mean(b) by bootstrap."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    idx_a = _bounded_draws(stream, len(a), reps * len(a)).reshape(reps, len(a))
    idx_b = _bounded_draws(stream, len(b), reps * len(b)).reshape(reps, len(b))
    diffs = a[idx_a].mean(axis=1) - b[idx_b].mean(axis=1)
    return float(np.quantile(diffs, 1.0 - level))


def _bounded_draws(stream: Stream, bound: int, count: int) -> np.ndarray:
    # 32-bit multiply-shift keeps everything in uint64; bias < bound/2^32
    u = stream.u64_array(count) >> np.uint64(32)
    return ((u * np.uint64(bound)) >> np.uint64(32)).astype(np.int64)
