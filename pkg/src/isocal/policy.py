"""Decision support built on calibrated scores: emergency reviewer assignment,
unexpected-outcome prediction and rank-position statistics."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.stats import rankdata

from isocal.aggregation import Strategy
from isocal.isotonic import isotonic_residuals
from isocal.model import Dataset, Decision
from isocal.stats import chi_square_2xk

INITIAL_PARTICIPATING = 3
INITIAL_OTHER = 4
# quantile cut points on |residual|; strictly above LOW gets 1, above HIGH gets 2
LOW_CUT = 0.3
HIGH_CUT = 0.7


class Indicator(str, enum.Enum):
    RESIDUAL = "residual"
    VARIANCE = "variance"
    CONFIDENCE = "confidence"


def residual_quantiles(residuals: Mapping[str, float]) -> dict[str, float]:
    """Rank of |residual| over n, ties sharing their average rank."""
    if not residuals:
        raise ValueError("no residuals")
    ids = sorted(residuals)
    ranks = rankdata([abs(residuals[p]) for p in ids], method="average")
    n = len(ids)
    return {p: float(r) / n for p, r in zip(ids, ranks)}


def emergency_count(quantile: float) -> int:
    if quantile > HIGH_CUT:
        return 2
    if quantile > LOW_CUT:
        return 1
    return 0


@dataclass(frozen=True)
class PlanEntry:
    paper_id: str
    participating: bool
    initial_reviewers: int
    emergency_reviewers: int
    quantile: float | None

    @property
    def total(self) -> int:
        return self.initial_reviewers + self.emergency_reviewers


@dataclass(frozen=True)
class EmergencyPlan:
    entries: tuple[PlanEntry, ...]

    def participating(self) -> list[PlanEntry]:
        return [e for e in self.entries if e.participating]

    def mean_reviewers(self, participating_only: bool = True) -> float:
        rows = self.participating() if participating_only else list(self.entries)
        return sum(e.total for e in rows) / len(rows) if rows else float("nan")


def participating_papers(d: Dataset) -> set[str]:
    return {p for r in d.rankings(min_length=2).values() for p in r.ids}


def plan_from_quantiles(all_papers: Iterable[str], quantiles: Mapping[str, float]) -> EmergencyPlan:
    entries = []
    for p in sorted(all_papers):
        if p in quantiles:
            q = quantiles[p]
            entries.append(PlanEntry(p, True, INITIAL_PARTICIPATING, emergency_count(q), q))
        else:
            entries.append(PlanEntry(p, False, INITIAL_OTHER, 0, None))
    return EmergencyPlan(tuple(entries))


def emergency_plan(d: Dataset, strategy: Strategy | str = Strategy.SIMPLE) -> EmergencyPlan:
    """Three initial reviewers for papers covered by a multi-paper ranking,
    four otherwise; participating papers get 0/1/2 emergency reviewers by the
    quantile of their |isotonic residual| among participants."""
    residuals, _ = isotonic_residuals(d, strategy)
    part = participating_papers(d) & set(residuals)
    quantiles = residual_quantiles({p: residuals[p] for p in part}) if part else {}
    return plan_from_quantiles((p.id for p in d.papers), quantiles)


def _indicator_values(d: Dataset, indicator: Indicator, strategy) -> dict[str, float]:
    """Higher value = predicted more unexpected."""
    if indicator is Indicator.RESIDUAL:
        res, _ = isotonic_residuals(d, strategy)
        return {p: abs(v) for p, v in res.items()}
    if indicator is Indicator.VARIANCE:
        return {p.id: float(np.var(p.scores)) for p in d.papers if p.reviews}
    out = {}
    for p in d.papers:
        conf = [r.confidence for r in p.reviews if r.confidence is not None]
        if conf:
            out[p.id] = -sum(conf) / len(conf)
    return out


@dataclass(frozen=True)
class PredictionResult:
    correct: int
    total: int
    predictions: dict[str, str]

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")


def unexpected_outcome_predictor(
    d: Dataset,
    flagged: Iterable[str],
    indicator: Indicator | str,
    strategy: Strategy | str = Strategy.SIMPLE,
) -> PredictionResult:
    """For each author owning a flagged paper, guess which of their papers it
    is from the indicator; ties go to the smaller paper id."""
    indicator = Indicator(indicator)
    flagged = set(flagged)
    values = _indicator_values(d, indicator, strategy)
    correct = total = 0
    predictions = {}
    for aid in sorted(d.papers_of):
        papers = sorted(d.papers_of[aid])
        if len(papers) < 2:
            continue
        mine = [p for p in papers if p in flagged]
        if not mine:
            continue
        truth = mine[0]
        candidates = [p for p in papers if p in values]
        if not candidates:
            continue
        guess = min(candidates, key=lambda p: (-values[p], p))
        predictions[aid] = guess
        total += 1
        correct += guess == truth
    return PredictionResult(correct, total, predictions)


TABLE_CATEGORIES = ("withdrawn", "rejected", "poster", "oral")


def _category(decision: Decision | None) -> str | None:
    if decision is None:
        return None
    # awarded papers were also orals
    return "oral" if decision is Decision.AWARD else decision.value


@dataclass(frozen=True)
class RankPositionTable:
    highest_counts: dict[str, int]
    lowest_counts: dict[str, int]
    p_values: dict[str, float]
    first_ranked_share: float
    designated_count: int

    def shares(self, row: str) -> dict[str, float]:
        counts = self.highest_counts if row == "highest" else self.lowest_counts
        total = sum(counts.values())
        return {c: (100.0 * counts[c] / total if total else float("nan")) for c in TABLE_CATEGORIES}


def rank_position_stats(d: Dataset, designated: Iterable[str] | None = None) -> RankPositionTable:
    """Decision shares of each author's top- vs bottom-group papers, per-category
    2x2 chi-square p-values, and the share of ``designated`` papers (default:
    orals and awards covered by a ranking) placed first by some author."""
    hi = {c: 0 for c in TABLE_CATEGORIES}
    lo = {c: 0 for c in TABLE_CATEGORIES}
    first: set[str] = set()
    rankings = d.rankings(min_length=2)
    for r in rankings.values():
        first.update(r.groups[0])
        if len(r.groups) < 2:
            continue
        for group, counts in ((r.groups[0], hi), (r.groups[-1], lo)):
            for pid in group:
                c = _category(d.paper_by_id[pid].decision)
                if c is not None:
                    counts[c] += 1
    n_hi, n_lo = sum(hi.values()), sum(lo.values())
    p_values = {}
    for c in TABLE_CATEGORIES:
        try:
            p_values[c] = chi_square_2xk([[hi[c], n_hi - hi[c]], [lo[c], n_lo - lo[c]]])
        except ValueError:
            p_values[c] = float("nan")

    ranked = {p for r in rankings.values() for p in r.ids}
    if designated is None:
        designated = {p.id for p in d.papers if p.decision in (Decision.ORAL, Decision.AWARD)}
    pool = set(designated) & ranked
    share = len(pool & first) / len(pool) if pool else float("nan")
    return RankPositionTable(hi, lo, p_values, share, len(pool))

