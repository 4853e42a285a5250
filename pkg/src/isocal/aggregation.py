"""Combining several authors' projections into one calibrated score per paper."""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Mapping

from isocal.isotonic import project_isotonic
from isocal.model import Dataset, Ranking


class Strategy(str, enum.Enum):
    SIMPLE = "simple"
    GREEDY = "greedy"
    MULTI_OWNER = "multiowner"

    @classmethod
    def parse(cls, value: "Strategy | str") -> "Strategy":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "").replace("_", "")
        for s in cls:
            if key in (s.value, s.name.lower().replace("_", "")):
                return s
        if key in ("simpleaveraging", "average", "averaging"):
            return cls.SIMPLE
        raise ValueError(f"unknown strategy {value!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class CalibrationResult:
    scores: dict[str, float]
    contributors: dict[str, list[str]]
    strategy: Strategy

    def changed(self, raw: Mapping[str, float]) -> list[str]:
        return [p for p, v in self.scores.items() if v != raw[p]]


def restrict_ranking(r: Ranking, keep) -> Ranking:
    return r.restrict(keep)


def _scored_rankings(d: Dataset, scores: Mapping[str, float]) -> dict[str, Ranking]:
    # papers without an input score (e.g. too few reviews) drop out of every ranking
    out = {}
    for aid, r in d.rankings().items():
        sub = r.restrict(scores.keys())
        if len(sub):
            out[aid] = sub
    return out


def calibrate_simple_average(d: Dataset, scores: Mapping[str, float]) -> CalibrationResult:
    fits: dict[str, list[float]] = {}
    contributors: dict[str, list[str]] = {p: [] for p in scores}
    for aid, r in _scored_rankings(d, scores).items():
        if len(r) < 2:
            continue
        fit = project_isotonic({p: scores[p] for p in r.ids}, r)
        for p in r.ids:
            fits.setdefault(p, []).append(fit.values[p])
            contributors[p].append(aid)
    out = {p: (sum(fits[p]) / len(fits[p]) if p in fits else float(scores[p])) for p in scores}
    return CalibrationResult(out, contributors, Strategy.SIMPLE)


class _LongestFirst:
    """Yields authors by most still-unassigned ranked papers, id ascending on ties."""

    def __init__(self, rankings: Mapping[str, Ranking]):
        self.rankings = dict(rankings)
        self.unassigned = {p for r in self.rankings.values() for p in r.ids}
        self.rankers: dict[str, list[str]] = {}
        for aid, r in self.rankings.items():
            for p in r.ids:
                self.rankers.setdefault(p, []).append(aid)
        self.count = {aid: len(r) for aid, r in self.rankings.items()}
        self._heap = [(-n, aid) for aid, n in self.count.items()]
        heapq.heapify(self._heap)

    def pop(self) -> tuple[str, Ranking] | None:
        while self._heap:
            neg, aid = heapq.heappop(self._heap)
            if aid not in self.rankings or -neg != self.count[aid]:
                continue
            if self.count[aid] == 0:
                return None
            return aid, self.rankings.pop(aid).restrict(self.unassigned)
        return None

    def assign(self, papers) -> None:
        for p in papers:
            if p not in self.unassigned:
                continue
            self.unassigned.discard(p)
            for aid in self.rankers[p]:
                if aid in self.rankings:
                    self.count[aid] -= 1
                    heapq.heappush(self._heap, (-self.count[aid], aid))


def calibrate_greedy(d: Dataset, scores: Mapping[str, float]) -> CalibrationResult:
    queue = _LongestFirst(_scored_rankings(d, scores))
    out = {p: float(v) for p, v in scores.items()}
    contributors: dict[str, list[str]] = {p: [] for p in scores}
    while (nxt := queue.pop()) is not None:
        aid, sub = nxt
        if len(sub) >= 2:
            fit = project_isotonic({p: scores[p] for p in sub.ids}, sub)
            for p in sub.ids:
                out[p] = fit.values[p]
                contributors[p].append(aid)
        queue.assign(sub.ids)
    return CalibrationResult(out, contributors, Strategy.GREEDY)


def calibrate_multi_owner(d: Dataset, scores: Mapping[str, float]) -> CalibrationResult:
    """Blocks are formed by the author with the most unassigned ranked papers;
    every author ranking two or more block papers contributes a projection,
    and block scores are the per-paper mean of those projections."""
    rankings = _scored_rankings(d, scores)
    queue = _LongestFirst(rankings)
    out = {p: float(v) for p, v in scores.items()}
    contributors: dict[str, list[str]] = {p: [] for p in scores}
    while (nxt := queue.pop()) is not None:
        _, owner_sub = nxt
        block = set(owner_sub.ids)
        fits: dict[str, list[float]] = {}
        for aid in sorted({a for p in block for a in queue.rankers[p]}):
            sub = rankings[aid].restrict(block)
            if len(sub) < 2:
                continue
            fit = project_isotonic({p: scores[p] for p in sub.ids}, sub)
            for p in sub.ids:
                fits.setdefault(p, []).append(fit.values[p])
                contributors[p].append(aid)
        for p, vals in fits.items():
            out[p] = sum(vals) / len(vals)
        queue.assign(block)
    return CalibrationResult(out, contributors, Strategy.MULTI_OWNER)


_DISPATCH = {
    Strategy.SIMPLE: calibrate_simple_average,
    Strategy.GREEDY: calibrate_greedy,
    Strategy.MULTI_OWNER: calibrate_multi_owner,
}


def calibrate(d: Dataset, scores: Mapping[str, float], strategy: Strategy | str = Strategy.SIMPLE) -> CalibrationResult:
    return _DISPATCH[Strategy.parse(strategy)](d, scores)
