"""Synthetic conferences: ground truth, reviewer noise, author rankings and an
authorship graph shaped like a large ML venue."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from isocal.aggregation import Strategy, calibrate
from isocal.evaluation import EvaluationReport, HoldoutMode, holdout_split, make_report, pool_reports
from isocal.model import Author, Dataset, Decision, Paper, Ranking, Review, Role

VENUE_AUTHORS = 18535
VENUE_PAPERS = 6538
# authors with at least t submissions
VENUE_TAILS = ((2, 4505), (5, 508), (10, 74), (15, 26), (20, 7))
VENUE_MAX_RANKING = 17


class InfeasibleGraphError(RuntimeError):
    def __init__(self, message: str, realized: Mapping[int, int] | None = None):
        super().__init__(message)
        self.realized = dict(realized or {})


class ReviewerModel(str, enum.Enum):
    UNBIASED = "unbiased"
    BOLD = "bold"
    CONSERVATIVE = "conservative"
    BOLD_CONSERVATIVE_MIX = "bold_conservative_mix"
    WITH_OUTLIER = "with_outlier"


class RankingModel(str, enum.Enum):
    TRUTH_ORDER = "truth_order"
    PLACKETT_LUCE = "plackett_luce"


class ExperimentKind(str, enum.Enum):
    NOISY_RANKING = "noisy"
    BIASED_REVIEWERS = "biased"
    OUTLIER_SCORE = "outlier"


@dataclass(frozen=True)
class AuthorGraphConfig:
    n_authors: int = VENUE_AUTHORS
    n_papers: int = VENUE_PAPERS
    tails: tuple[tuple[int, float], ...] = VENUE_TAILS
    max_papers_per_author: int = 30
    max_ranking_length: int = VENUE_MAX_RANKING
    tolerance: float = 0.10
    max_attempts: int = 20

    @classmethod
    def scaled(cls, factor: float, **kwargs) -> "AuthorGraphConfig":
        if not 0.0 < factor:
            raise ValueError("scale factor must be positive")
        return cls(
            n_authors=max(1, round(VENUE_AUTHORS * factor)),
            n_papers=max(1, round(VENUE_PAPERS * factor)),
            tails=tuple((t, c * factor) for t, c in VENUE_TAILS),
            **kwargs,
        )

    def check(self) -> None:
        thresholds = [t for t, _ in self.tails]
        counts = [c for _, c in self.tails]
        if thresholds != sorted(set(thresholds)) or (thresholds and thresholds[0] < 2):
            raise InfeasibleGraphError(f"tail thresholds must be increasing and >= 2: {thresholds}")
        if any(b > a for a, b in zip(counts, counts[1:])):
            raise InfeasibleGraphError(f"tail counts must be non-increasing: {counts}")
        if counts and counts[0] > self.n_authors:
            raise InfeasibleGraphError("more multi-paper authors than authors")
        if thresholds and thresholds[-1] > self.max_papers_per_author:
            raise InfeasibleGraphError("tail threshold above max_papers_per_author")


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator parameters.

    ``truth_scale`` and ``noise_scale`` are the second parameters of the
    Gaussians; ``scale_is_variance`` says whether they are variances or
    standard deviations.
    """

    truth_mean: float = 5.0
    truth_scale: float = 1.25
    noise_scale: float = 1.25
    scale_is_variance: bool = False
    reviewer_model: ReviewerModel = ReviewerModel.UNBIASED
    reviews_per_paper: int = 3
    ranking_model: RankingModel = RankingModel.PLACKETT_LUCE
    ranking_sharpness: float = 1.0
    graph: AuthorGraphConfig = field(default_factory=lambda: AuthorGraphConfig.scaled(0.1))
    seed: int = 0

    def __post_init__(self):
        if self.truth_scale < 0 or self.noise_scale < 0:
            raise ValueError("scales must be non-negative")
        if self.reviews_per_paper < 1:
            raise ValueError("reviews_per_paper must be >= 1")

    def sd(self, scale: float) -> float:
        return math.sqrt(scale) if self.scale_is_variance else scale

    @property
    def truth_sd(self) -> float:
        return self.sd(self.truth_scale)

    @property
    def noise_sd(self) -> float:
        return self.sd(self.noise_scale)


def default_config(kind: ExperimentKind | str, scale: float = 0.1, seed: int = 0, **kwargs) -> SyntheticConfig:
    kind = ExperimentKind(kind)
    defaults = {
        ExperimentKind.NOISY_RANKING: dict(
            reviewer_model=ReviewerModel.UNBIASED, ranking_model=RankingModel.PLACKETT_LUCE
        ),
        ExperimentKind.BIASED_REVIEWERS: dict(
            reviewer_model=ReviewerModel.BOLD_CONSERVATIVE_MIX, ranking_model=RankingModel.TRUTH_ORDER
        ),
        ExperimentKind.OUTLIER_SCORE: dict(
            reviewer_model=ReviewerModel.WITH_OUTLIER, ranking_model=RankingModel.PLACKETT_LUCE
        ),
    }[kind]
    defaults.update(kwargs)
    return SyntheticConfig(graph=AuthorGraphConfig.scaled(scale), seed=seed, **defaults)


def round_half_away(x):
    """Round to nearest integer, halves away from zero (numpy rounds to even)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def gen_ground_truth(n: int, cfg: SyntheticConfig, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.clip(rng.normal(cfg.truth_mean, cfg.truth_sd, size=n), 0.0, 10.0)


def bias_term(truth) -> np.ndarray:
    return sigmoid(np.asarray(truth, dtype=float) - 5.0) - 0.5


_BIAS_SIGN = {ReviewerModel.BOLD: 1.0, ReviewerModel.CONSERVATIVE: -1.0}
_bias_sign = np.vectorize(lambda m: _BIAS_SIGN.get(ReviewerModel(m), 0.0), otypes=[float])


def gen_reviews(
    truth, models, rng: np.random.Generator, noise_sd: float
) -> np.ndarray:
    """Integer review scores for each (truth, reviewer model) pair."""
    truth = np.asarray(truth, dtype=float)
    noise = rng.normal(0.0, noise_sd, size=truth.shape) if noise_sd > 0 else np.zeros(truth.shape)
    if isinstance(models, (str, ReviewerModel)):
        sign = np.full(truth.shape, _BIAS_SIGN.get(ReviewerModel(models), 0.0))
    else:
        cells = np.asarray(models, dtype=object)
        sign = np.broadcast_to(_bias_sign(cells), truth.shape)
    raw = truth + noise + sign * bias_term(truth)
    return np.clip(round_half_away(raw), 0, 10).astype(int)


def gen_review(truth: float, model: ReviewerModel | str, rng: np.random.Generator, noise_sd: float = 1.25) -> int:
    return int(gen_reviews([truth], [ReviewerModel(model)], rng, noise_sd)[0])


def sample_plackett_luce(scores: Sequence[float], rng: np.random.Generator) -> list[int]:
    """Sequentially draw a permutation; position j takes item i with
    probability exp(s_i) / sum over the remaining items."""
    s = [float(v) for v in scores]
    if not all(math.isfinite(v) for v in s):
        raise ValueError("Plackett-Luce scores must be finite")
    remaining = list(range(len(s)))
    order: list[int] = []
    while len(remaining) > 1:
        top = max(s[i] for i in remaining)
        w = [math.exp(s[i] - top) for i in remaining]
        u = rng.random() * math.fsum(w)
        acc = 0.0
        pick = len(remaining) - 1
        for j, wj in enumerate(w):
            acc += wj
            if u < acc:
                pick = j
                break
        order.append(remaining.pop(pick))
    order.extend(remaining)
    return order


def plackett_luce_probability(scores: Sequence[float], order: Sequence[int]) -> float:
    s = np.asarray(scores, dtype=float)[list(order)]
    logp = 0.0
    for j in range(len(s) - 1):
        tail = s[j:]
        m = tail.max()
        logp += s[j] - (m + math.log(np.exp(tail - m).sum()))
    return math.exp(logp)


def _interval_counts(cfg: AuthorGraphConfig) -> list[tuple[int, int, int]]:
    """(low, high, count) per papers-per-author interval, tails rounded half up."""
    tails = [(1, cfg.n_authors)] + [(t, math.floor(c + 0.5)) for t, c in cfg.tails]
    out = []
    for j, (t, c) in enumerate(tails):
        hi = tails[j + 1][0] - 1 if j + 1 < len(tails) else cfg.max_papers_per_author
        nxt = tails[j + 1][1] if j + 1 < len(tails) else 0
        out.append((t, hi, c - nxt))
    return out


def realized_tails(counts, thresholds) -> dict[int, int]:
    counts = np.asarray(counts)
    return {t: int((counts >= t).sum()) for t in thresholds}


def _draw_paper_counts(cfg: AuthorGraphConfig, rng: np.random.Generator) -> np.ndarray:
    counts = []
    for lo, hi, c in _interval_counts(cfg):
        support = np.arange(lo, hi + 1)
        w = support.astype(float) ** -2.5
        counts.append(rng.choice(support, size=c, p=w / w.sum()))
    counts = np.concatenate(counts) if counts else np.zeros(0, dtype=int)
    return rng.permutation(counts)


def _within_tolerance(realized: Mapping[int, int], cfg: AuthorGraphConfig) -> bool:
    # integer counts cannot match fractional targets closer than rounding
    return all(abs(realized[t] - c) <= max(cfg.tolerance * c, 0.5) for t, c in cfg.tails)


def gen_authorship_graph(cfg: AuthorGraphConfig, rng: np.random.Generator) -> Dataset:
    """Authors, papers and authorship pairs; no reviews or rankings yet.

    Papers-per-author counts are drawn stratified by the tail thresholds, then
    authors are paired with paper slots (every paper gets at least one
    author), multi-paper authors first, weighted by free slots.
    """
    cfg.check()
    thresholds = [t for t, _ in cfg.tails]
    realized: dict[int, int] = {}
    for _ in range(cfg.max_attempts):
        counts = _draw_paper_counts(cfg, rng)
        realized = realized_tails(counts, thresholds)
        if not _within_tolerance(realized, cfg):
            continue
        pairs = _pair_authors(counts, cfg.n_papers, rng)
        if pairs is None:
            continue
        width_a = len(str(cfg.n_authors))
        width_p = len(str(cfg.n_papers))
        aids = [f"a{i:0{width_a}d}" for i in range(cfg.n_authors)]
        pids = [f"p{i:0{width_p}d}" for i in range(cfg.n_papers)]
        return Dataset.build(
            (Paper(p) for p in pids),
            (Author(a) for a in aids),
            ((aids[a], pids[p]) for a, p in pairs),
        )
    raise InfeasibleGraphError(
        f"could not realize tail counts {dict(cfg.tails)} within {cfg.max_attempts} attempts", realized
    )


def _pair_authors(counts: np.ndarray, n_papers: int, rng: np.random.Generator) -> list[tuple[int, int]] | None:
    total = int(counts.sum())
    if total < n_papers or (counts.size and counts.max() > n_papers):
        return None
    capacity = np.ones(n_papers, dtype=int)
    extra = rng.multinomial(total - n_papers, np.full(n_papers, 1.0 / n_papers))
    capacity += extra
    pairs: list[tuple[int, int]] = []
    multi = [int(a) for a in np.argsort(-counts, kind="stable") if counts[a] > 1]
    for a in multi:
        c = int(counts[a])
        open_ = np.flatnonzero(capacity)
        if open_.size < c:
            return None
        w = capacity[open_].astype(float)
        chosen = rng.choice(open_, size=c, replace=False, p=w / w.sum())
        capacity[chosen] -= 1
        pairs.extend((a, int(p)) for p in chosen)
    singles = np.flatnonzero(counts == 1)
    slots = rng.permutation(np.repeat(np.arange(n_papers), capacity))
    if slots.size != singles.size:
        return None
    pairs.extend((int(a), int(p)) for a, p in zip(singles, slots))
    return pairs


def _review_models(cfg: SyntheticConfig, shape, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    if cfg.reviewer_model is ReviewerModel.BOLD_CONSERVATIVE_MIX:
        bold = rng.random(shape) < 0.5
        out[bold] = ReviewerModel.BOLD
        out[~bold] = ReviewerModel.CONSERVATIVE
    elif cfg.reviewer_model in (ReviewerModel.BOLD, ReviewerModel.CONSERVATIVE):
        out.fill(cfg.reviewer_model)
    else:
        out.fill(ReviewerModel.UNBIASED)
    return out


def gen_rankings(
    skeleton: Dataset, truth: Mapping[str, float], cfg: SyntheticConfig, rng: np.random.Generator
) -> dict[str, Ranking]:
    """Every author with two or more papers ranks them (up to the length cap)."""
    out = {}
    cap = cfg.graph.max_ranking_length
    for aid in sorted(skeleton.papers_of):
        papers = skeleton.papers_of[aid]
        if len(papers) < 2:
            continue
        if len(papers) > cap:
            papers = sorted(papers[i] for i in rng.choice(len(papers), size=cap, replace=False))
        if cfg.ranking_model is RankingModel.TRUTH_ORDER:
            order = sorted(papers, key=lambda p: (-truth[p], p))
        else:
            perm = sample_plackett_luce([cfg.ranking_sharpness * truth[p] for p in papers], rng)
            order = [papers[i] for i in perm]
        out[aid] = Ranking.from_order(order)
    return out


def populate(skeleton: Dataset, cfg: SyntheticConfig, rng: np.random.Generator) -> Dataset:
    """Fill a skeleton with ground truth, reviews and rankings."""
    pids = [p.id for p in skeleton.papers]
    truth = gen_ground_truth(len(pids), cfg, rng)
    shape = (len(pids), cfg.reviews_per_paper)
    models = _review_models(cfg, shape, rng)
    scores = gen_reviews(np.repeat(truth[:, None], cfg.reviews_per_paper, axis=1), models, rng, cfg.noise_sd)
    papers = [
        replace(p, reviews=tuple(Review(int(s)) for s in row), ground_truth=float(t))
        for p, row, t in zip(skeleton.papers, scores, truth)
    ]
    truth_by_id = dict(zip(pids, truth.tolist()))
    rankings = gen_rankings(skeleton, truth_by_id, cfg, rng)
    return replace(skeleton, papers=tuple(papers)).with_rankings(rankings)


def assign_decisions_by_truth(d: Dataset, k: int) -> Dataset:
    """Top-k papers by ground truth become orals, the rest rejections."""
    ranked = sorted(d.papers, key=lambda p: (-(p.ground_truth or 0.0), p.id))
    top = {p.id for p in ranked[:k]}
    papers = tuple(replace(p, decision=Decision.ORAL if p.id in top else Decision.REJECTED) for p in d.papers)
    return replace(d, papers=papers)


def generate_dataset(cfg: SyntheticConfig, seed: int | None = None, skeleton: Dataset | None = None) -> Dataset:
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    if skeleton is None:
        skeleton = gen_authorship_graph(cfg.graph, rng)
    return populate(skeleton, cfg, rng)


@dataclass(frozen=True)
class SyntheticRun:
    kind: ExperimentKind
    seed: int
    dataset: Dataset
    reports: dict[str, EvaluationReport]
    baseline: dict[str, EvaluationReport] | None = None


def _ranked(d: Dataset) -> list[str]:
    return sorted({p for r in d.rankings(min_length=2).values() for p in r.ids})


def run_synthetic_experiment(
    kind: ExperimentKind | str,
    cfg: SyntheticConfig,
    seed: int | None = None,
    skeleton: Dataset | None = None,
    strategies=tuple(Strategy),
) -> SyntheticRun:
    """One replication of a synthetic experiment for every strategy.

    Noisy-ranking and biased-reviewer runs score the mean review and its
    calibrated version against the ground truth. The outlier run mixes one
    review with a uniform 1..10 score and measures errors against the mean of
    the other reviews; ``baseline`` holds the same run without the outlier.
    """
    kind = ExperimentKind(kind)
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    if skeleton is None:
        skeleton = gen_authorship_graph(cfg.graph, rng)
    d = populate(skeleton, cfg, rng)
    ids = _ranked(d)
    strategies = tuple(Strategy.parse(s) for s in strategies)

    if kind is ExperimentKind.OUTLIER_SCORE:
        if cfg.reviews_per_paper < 2:
            raise ValueError("outlier experiment needs at least two reviews per paper")
        plain: dict[str, float] = {}
        mixed: dict[str, float] = {}
        target: dict[str, float] = {}
        for p in d.papers:
            s = p.scores
            i = int(rng.integers(len(s)))
            outlier = int(rng.integers(1, 11))
            plain[p.id] = float(s[i])
            mixed[p.id] = (s[i] + outlier) / 2.0
            rest = s[:i] + s[i + 1 :]
            target[p.id] = sum(rest) / len(rest)
        reports, baseline = {}, {}
        for st in strategies:
            reports[st.value] = make_report(st.value, seed, ids, mixed, calibrate(d, mixed, st).scores, target)
            baseline[st.value] = make_report(st.value, seed, ids, plain, calibrate(d, plain, st).scores, target)
        return SyntheticRun(kind, seed, d, reports, baseline)

    raw = d.mean_scores()
    truth = {p.id: float(p.ground_truth) for p in d.papers}
    reports = {
        st.value: make_report(st.value, seed, ids, raw, calibrate(d, raw, st).scores, truth, "truth")
        for st in strategies
    }
    return SyntheticRun(kind, seed, d, reports)


def holdout_against_truth(
    d: Dataset,
    seed: int,
    strategy: Strategy | str = Strategy.SIMPLE,
    mode: HoldoutMode | str = HoldoutMode.ONE,
) -> tuple[EvaluationReport, EvaluationReport]:
    """The holdout pipeline on a dataset with known truth: the same estimates
    scored once against the held-out reviews and once against the truth."""
    split = holdout_split(d, mode, seed)
    ids = _ranked(d)
    iso = calibrate(d, split.estimator, strategy).scores
    name = Strategy.parse(strategy).value
    truth = {p.id: float(p.ground_truth) for p in d.papers}
    proxy = make_report(name, seed, ids, split.estimator, iso, split.target)
    true = make_report(name, seed, ids, split.estimator, iso, truth, "truth")
    return proxy, true


@dataclass(frozen=True)
class ReplicatedRun:
    runs: tuple[SyntheticRun, ...]
    pooled: dict[str, EvaluationReport]
    pooled_baseline: dict[str, EvaluationReport] | None


def _replicate(kind, cfg, seed, strategies, keep):
    run = run_synthetic_experiment(kind, cfg, seed, strategies=strategies)
    return run if keep else replace(run, dataset=None)


def run_replications(
    kind: ExperimentKind | str,
    cfg: SyntheticConfig,
    seeds: Sequence[int],
    strategies=tuple(Strategy),
    n_jobs: int = 1,
    keep_datasets: bool = False,
) -> ReplicatedRun:
    """Independent replications (graph included) pooled per strategy."""
    strategies = tuple(Strategy.parse(s) for s in strategies)
    args = [(kind, cfg, int(s), strategies, keep_datasets) for s in seeds]
    if n_jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(args))) as ex:
            runs = tuple(ex.map(_replicate, *zip(*args)))
    else:
        runs = tuple(_replicate(*a) for a in args)
    pooled = {s.value: pool_reports([r.reports[s.value] for r in runs]) for s in strategies}
    pooled_baseline = None
    if runs and runs[0].baseline is not None:
        pooled_baseline = {s.value: pool_reports([r.baseline[s.value] for r in runs]) for s in strategies}
    return ReplicatedRun(runs, pooled, pooled_baseline)

