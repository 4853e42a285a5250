"""Holdout evaluation of calibrated scores against held-out reviews.

The accuracy of an estimator is measured against the mean of reviews it did
not see (the "proxy" target). Proxy MSE overstates the true MSE by the
target's variance, but differences between two estimators are unbiased.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from isocal.aggregation import Strategy, calibrate
from isocal.model import Dataset, Decision, Role
from isocal.stats import mse_reduction_ci, paired_t_test_one_sided


class HoldoutMode(str, enum.Enum):
    ONE = "one"
    TWO = "two"

    @property
    def n_estimator(self) -> int:
        return 1 if self is HoldoutMode.ONE else 2


class GroupKey(str, enum.Enum):
    RANKING_LENGTH = "ranking_length"
    COAUTHOR_COUNT = "coauthor_count"


@dataclass(frozen=True)
class HoldoutSplit:
    estimator: dict[str, float]
    target: dict[str, float]
    mode: HoldoutMode
    excluded: tuple[str, ...] = ()
    seed: int | None = None


def holdout_split(d: Dataset, mode: HoldoutMode | str = HoldoutMode.ONE, seed: int = 0) -> HoldoutSplit:
    """Per paper, draw 1 (or 2) reviews as the estimator and average the rest
    as the target. Papers with too few reviews are excluded."""
    mode = HoldoutMode(mode)
    k = mode.n_estimator
    rng = np.random.default_rng(seed)
    est: dict[str, float] = {}
    tgt: dict[str, float] = {}
    excluded: list[str] = []
    for p in sorted(d.papers, key=lambda p: p.id):
        scores = p.scores
        if len(scores) < k + 1:
            excluded.append(p.id)
            continue
        picked = rng.choice(len(scores), size=k, replace=False)
        chosen = set(int(i) for i in picked)
        est[p.id] = sum(scores[i] for i in chosen) / k
        rest = [s for i, s in enumerate(scores) if i not in chosen]
        tgt[p.id] = sum(rest) / len(rest)
    return HoldoutSplit(est, tgt, mode, tuple(excluded), seed)


def proxy_errors(est: Mapping[str, float], proxy: Mapping[str, float]) -> dict[str, tuple[float, float]]:
    if set(est) != set(proxy):
        missing = sorted(set(est) ^ set(proxy))
        raise ValueError(f"estimate and target cover different papers: {missing[:5]}")
    return {p: ((est[p] - proxy[p]) ** 2, abs(est[p] - proxy[p])) for p in sorted(est)}


def _improvement(raw: float, iso: float) -> float:
    return 100.0 * (raw - iso) / raw if raw != 0 else float("nan")


@dataclass(frozen=True)
class EvaluationReport:
    """Per-paper errors of the raw and calibrated estimators, plus summaries.

    ``mse_ci95``/``mse_ci99`` bound the mean per-paper reduction in squared
    error (raw minus isotonic).
    """

    strategy: str
    seed: int | str
    ids: tuple[str, ...]
    raw: np.ndarray
    iso: np.ndarray
    target: np.ndarray
    target_kind: str = "proxy"
    raw_sq: np.ndarray = field(init=False, repr=False)
    iso_sq: np.ndarray = field(init=False, repr=False)
    raw_abs: np.ndarray = field(init=False, repr=False)
    iso_abs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "raw_sq", (self.raw - self.target) ** 2)
        object.__setattr__(self, "iso_sq", (self.iso - self.target) ** 2)
        object.__setattr__(self, "raw_abs", np.abs(self.raw - self.target))
        object.__setattr__(self, "iso_abs", np.abs(self.iso - self.target))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def raw_mse(self) -> float:
        return math.fsum(self.raw_sq) / self.n

    @property
    def iso_mse(self) -> float:
        return math.fsum(self.iso_sq) / self.n

    @property
    def raw_mae(self) -> float:
        return math.fsum(self.raw_abs) / self.n

    @property
    def iso_mae(self) -> float:
        return math.fsum(self.iso_abs) / self.n

    @property
    def mse_improvement(self) -> float:
        return _improvement(self.raw_mse, self.iso_mse)

    @property
    def mae_improvement(self) -> float:
        return _improvement(self.raw_mae, self.iso_mae)

    @property
    def mse_p_value(self) -> float:
        return paired_t_test_one_sided(self.raw_sq, self.iso_sq) if self.n >= 2 else float("nan")

    @property
    def mae_p_value(self) -> float:
        return paired_t_test_one_sided(self.raw_abs, self.iso_abs) if self.n >= 2 else float("nan")

    @property
    def mse_reduction(self) -> float:
        return self.raw_mse - self.iso_mse

    def mse_ci(self, level: float) -> tuple[float, float]:
        if self.n < 2:
            return float("nan"), float("nan")
        return mse_reduction_ci(self.raw_sq - self.iso_sq, level)

    @property
    def mse_ci95(self) -> tuple[float, float]:
        return self.mse_ci(0.95)

    @property
    def mse_ci99(self) -> tuple[float, float]:
        return self.mse_ci(0.99)

    def subset(self, ids: Iterable[str]) -> "EvaluationReport":
        pos = {p: i for i, p in enumerate(self.ids)}
        idx = [pos[p] for p in ids]
        return EvaluationReport(
            self.strategy, self.seed, tuple(self.ids[i] for i in idx),
            self.raw[idx], self.iso[idx], self.target[idx], self.target_kind,
        )


def make_report(
    strategy: str,
    seed: int | str,
    ids: Sequence[str],
    raw: Mapping[str, float],
    iso: Mapping[str, float],
    target: Mapping[str, float],
    target_kind: str = "proxy",
) -> EvaluationReport:
    ids = tuple(sorted(ids))
    if not ids:
        raise ValueError("no papers to evaluate")
    return EvaluationReport(
        strategy,
        seed,
        ids,
        np.array([raw[p] for p in ids], dtype=float),
        np.array([iso[p] for p in ids], dtype=float),
        np.array([target[p] for p in ids], dtype=float),
        target_kind,
    )


def pool_reports(reports: Sequence[EvaluationReport], seed: int | str = "pooled") -> EvaluationReport:
    """Concatenate per-paper errors across replications."""
    if not reports:
        raise ValueError("nothing to pool")
    strategies = {r.strategy for r in reports}
    if len(strategies) != 1:
        raise ValueError(f"cannot pool reports of different strategies {sorted(strategies)}")
    return EvaluationReport(
        reports[0].strategy,
        seed,
        tuple(f"{r.seed}:{p}" for r in reports for p in r.ids),
        np.concatenate([r.raw for r in reports]),
        np.concatenate([r.iso for r in reports]),
        np.concatenate([r.target for r in reports]),
        reports[0].target_kind,
    )


def ranked_papers(d: Dataset) -> set[str]:
    return {p for r in d.rankings().values() for p in r.ids}


def evaluation_population(d: Dataset, candidates: Iterable[str], population: str = "ranked") -> list[str]:
    candidates = set(candidates)
    if population == "all":
        return sorted(candidates)
    if population == "ranked":
        return sorted(candidates & ranked_papers(d))
    raise ValueError(f"unknown population {population!r}")


@dataclass(frozen=True)
class StrategyEvaluation:
    reports: dict[tuple[str, int], EvaluationReport]
    pooled: dict[str, EvaluationReport]
    seeds: tuple[int, ...]
    excluded: dict[int, tuple[str, ...]]


def _evaluate_seed(d: Dataset, mode: HoldoutMode, seed: int, strategies: tuple[Strategy, ...], population: str):
    split = holdout_split(d, mode, seed)
    ids = evaluation_population(d, split.estimator, population)
    out = {}
    for s in strategies:
        result = calibrate(d, split.estimator, s)
        out[s.value] = make_report(s.value, seed, ids, split.estimator, result.scores, split.target)
    return out, split.excluded


def evaluate_strategies(
    d: Dataset,
    mode: HoldoutMode | str = HoldoutMode.ONE,
    seeds: Sequence[int] = (0,),
    strategies: Iterable[Strategy | str] = tuple(Strategy),
    population: str = "ranked",
    n_jobs: int = 1,
) -> StrategyEvaluation:
    """Holdout-evaluate each strategy for every seed and pool across seeds."""
    mode = HoldoutMode(mode)
    strategies = tuple(Strategy.parse(s) for s in strategies)
    seeds = tuple(int(s) for s in seeds)
    args = [(d, mode, s, strategies, population) for s in seeds]
    if n_jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(seeds))) as ex:
            results = list(ex.map(_evaluate_seed, *zip(*args)))
    else:
        results = [_evaluate_seed(*a) for a in args]

    reports: dict[tuple[str, int], EvaluationReport] = {}
    excluded = {}
    for seed, (per_strategy, excl) in zip(seeds, results):
        excluded[seed] = excl
        for name, rep in per_strategy.items():
            reports[(name, seed)] = rep
    pooled = {
        s.value: pool_reports([reports[(s.value, seed)] for seed in seeds]) for s in strategies
    }
    return StrategyEvaluation(reports, pooled, seeds, excluded)


@dataclass(frozen=True)
class GroupStats:
    key: int
    n: int
    raw_mse: float
    iso_mse: float
    raw_mae: float
    iso_mae: float

    @property
    def mse_improvement(self) -> float:
        return _improvement(self.raw_mse, self.iso_mse)

    @property
    def mae_improvement(self) -> float:
        return _improvement(self.raw_mae, self.iso_mae)


def group_keys(d: Dataset, key: GroupKey | str) -> dict[str, int]:
    """Group label per paper: the longest ranking covering it, or its author count."""
    key = GroupKey(key)
    if key is GroupKey.COAUTHOR_COUNT:
        return {p: len(a) for p, a in d.authors_of.items()}
    out: dict[str, int] = {}
    for r in d.rankings().values():
        for p in r.ids:
            out[p] = max(out.get(p, 0), len(r))
    return out


def group_by(d: Dataset, report: EvaluationReport, key: GroupKey | str) -> list[GroupStats]:
    labels = group_keys(d, key)
    buckets: dict[int, list[int]] = {}
    for i, p in enumerate(report.ids):
        pid = p.split(":", 1)[1] if isinstance(report.seed, str) else p
        if pid in labels:
            buckets.setdefault(labels[pid], []).append(i)
    out = []
    for k in sorted(buckets):
        idx = buckets[k]
        out.append(
            GroupStats(
                k,
                len(idx),
                math.fsum(report.raw_sq[idx]) / len(idx),
                math.fsum(report.iso_sq[idx]) / len(idx),
                math.fsum(report.raw_abs[idx]) / len(idx),
                math.fsum(report.iso_abs[idx]) / len(idx),
            )
        )
    return out


def top_k(scores: Mapping[str, float], k: int) -> list[str]:
    return sorted(scores, key=lambda p: (-scores[p], p))[:k]


def top_k_overlap(a: Mapping[str, float], b: Mapping[str, float], percentile: float) -> float:
    if not a:
        raise ValueError("empty score vectors")
    if set(a) != set(b):
        raise ValueError("score vectors cover different papers")
    if not 0.0 < percentile <= 1.0:
        raise ValueError("percentile must lie in (0, 1]")
    # the epsilon keeps e.g. 0.3 * 10 from rounding up to 4
    k = max(1, math.ceil(percentile * len(a) - 1e-9))
    return len(set(top_k(a, k)) & set(top_k(b, k))) / k


@dataclass(frozen=True)
class PerturbationRow:
    fraction: float
    k: int
    seeds: tuple[int, ...]
    overlaps: tuple[int, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.overlaps))

    @property
    def sd(self) -> float:
        return float(np.std(self.overlaps, ddof=1)) if len(self.overlaps) > 1 else 0.0


def reference_set(d: Dataset, decisions: Iterable[Decision] = (Decision.ORAL, Decision.AWARD)) -> set[str]:
    wanted = set(decisions)
    return {p.id for p in d.papers if p.decision in wanted}


def perturbation_study(
    d: Dataset,
    fractions: Sequence[float],
    k: int | None = None,
    seeds: Sequence[int] = (0,),
    strategy: Strategy | str = Strategy.GREEDY,
    reference: Iterable[str] | None = None,
) -> list[PerturbationRow]:
    """Reverse the rankings of a random fraction of authors, recalibrate, and
    count how many of the top-k calibrated papers fall in the reference set."""
    ref = set(reference) if reference is not None else reference_set(d)
    scores = d.mean_scores()
    if k is None:
        k = len(ref)
    if k < 1 or k > len(scores):
        raise ValueError(f"k={k} outside [1, {len(scores)}]")
    for f in fractions:
        if not 0.0 <= f <= 0.5:
            raise ValueError(f"fraction {f} outside [0, 0.5]")
    rankers = sorted(d.rankings(min_length=2))
    base = d.rankings()
    rows = []
    for f in fractions:
        m = math.floor(f * len(rankers) + 1e-9)
        overlaps = []
        for seed in seeds:
            order = np.random.default_rng(seed).permutation(len(rankers))
            flipped = {rankers[i]: base[rankers[i]].reversed() for i in order[:m]}
            result = calibrate(d.with_rankings(flipped), scores, strategy)
            overlaps.append(len(set(top_k(result.scores, k)) & ref))
        rows.append(PerturbationRow(float(f), k, tuple(int(s) for s in seeds), tuple(overlaps)))
    return rows


def filter_rankings(d: Dataset, roles: Iterable[Role | str]) -> Dataset:
    """Drop the rankings (not the authorship) of authors outside ``roles``."""
    keep = {Role(r) for r in roles}
    return d.with_rankings({a.id: None for a in d.authors if a.role not in keep and a.ranking is not None})
