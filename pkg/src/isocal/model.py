"""Domain types: reviews, papers, authors, tie-aware rankings and datasets."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping


class Decision(str, enum.Enum):
    WITHDRAWN = "withdrawn"
    REJECTED = "rejected"
    POSTER = "poster"
    ORAL = "oral"
    AWARD = "award"


class Role(str, enum.Enum):
    NONE = "none"
    REVIEWER = "reviewer"
    AREA_CHAIR = "area_chair"


@dataclass(frozen=True)
class Review:
    score: int
    confidence: int | None = None


@dataclass(frozen=True)
class Paper:
    id: str
    reviews: tuple[Review, ...] = ()
    decision: Decision | None = None
    ground_truth: float | None = None

    @property
    def scores(self) -> list[int]:
        return [r.score for r in self.reviews]

    def mean_score(self) -> float:
        if not self.reviews:
            raise ValueError(f"paper {self.id!r} has no reviews")
        return sum(r.score for r in self.reviews) / len(self.reviews)


@dataclass(frozen=True)
class Ranking:
    """Tie-groups of paper ids, best group first.

    Members of one group are mutually unconstrained; every member of an
    earlier group must score at least as high as every member of a later one.
    """

    groups: tuple[tuple[str, ...], ...] = ()

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[str]]) -> "Ranking":
        return cls(tuple(tuple(g) for g in groups))

    @classmethod
    def from_order(cls, ids: Iterable[str]) -> "Ranking":
        """Strict ranking, one paper per group."""
        return cls(tuple((i,) for i in ids))

    @property
    def ids(self) -> list[str]:
        return [p for g in self.groups for p in g]

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups)

    def __contains__(self, paper_id: object) -> bool:
        return any(paper_id in g for g in self.groups)

    def reversed(self) -> "Ranking":
        return Ranking(tuple(reversed(self.groups)))

    def restrict(self, keep: Iterable[str]) -> "Ranking":
        keep = set(keep)
        groups = (tuple(p for p in g if p in keep) for g in self.groups)
        return Ranking(tuple(g for g in groups if g))

    def to_lists(self) -> list[list[str]]:
        return [list(g) for g in self.groups]


@dataclass(frozen=True)
class Author:
    id: str
    role: Role = Role.NONE
    ranking: Ranking | None = None


@dataclass(frozen=True)
class Violation:
    subject: str
    reason: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.reason}"


@dataclass(frozen=True)
class Dataset:
    papers: tuple[Paper, ...] = ()
    authors: tuple[Author, ...] = ()
    authorship: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    @classmethod
    def build(
        cls,
        papers: Iterable[Paper],
        authors: Iterable[Author],
        authorship: Iterable[tuple[str, str]],
    ) -> "Dataset":
        return cls(tuple(papers), tuple(authors), frozenset((a, p) for a, p in authorship))

    @cached_property
    def paper_by_id(self) -> dict[str, Paper]:
        return {p.id: p for p in self.papers}

    @cached_property
    def author_by_id(self) -> dict[str, Author]:
        return {a.id: a for a in self.authors}

    @cached_property
    def papers_of(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {a.id: [] for a in self.authors}
        for a, p in sorted(self.authorship):
            out.setdefault(a, []).append(p)
        return out

    @cached_property
    def authors_of(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {p.id: [] for p in self.papers}
        for a, p in sorted(self.authorship):
            out.setdefault(p, []).append(a)
        return out

    def rankings(self, min_length: int = 1) -> dict[str, Ranking]:
        """Rankings keyed by author id (sorted), skipping shorter ones."""
        return {
            a.id: a.ranking
            for a in sorted(self.authors, key=lambda a: a.id)
            if a.ranking is not None and len(a.ranking) >= min_length
        }

    def mean_scores(self) -> dict[str, float]:
        """Mean review score per paper; papers without reviews are omitted."""
        return {p.id: p.mean_score() for p in self.papers if p.reviews}

    def with_rankings(self, rankings: Mapping[str, Ranking | None]) -> "Dataset":
        authors = tuple(
            replace(a, ranking=rankings[a.id]) if a.id in rankings else a
            for a in self.authors
        )
        return replace(self, authors=authors)


def validate_dataset(d: Dataset) -> list[Violation]:
    """Every invariant violation in ``d``; an empty list means valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for p in d.papers:
        if p.id in seen:
            out.append(Violation(f"paper {p.id}", "duplicate paper id"))
        seen.add(p.id)
        # synthetic generators clip to [0, 10]; live reviews start at 1
        low = 0 if p.ground_truth is not None else 1
        for i, r in enumerate(p.reviews):
            if not _is_int(r.score) or not low <= r.score <= 10:
                out.append(Violation(f"paper {p.id}", f"reviews[{i}].score={r.score!r} outside [{low}, 10]"))
            if r.confidence is not None and (not _is_int(r.confidence) or not 1 <= r.confidence <= 5):
                out.append(
                    Violation(f"paper {p.id}", f"reviews[{i}].confidence={r.confidence!r} outside [1, 5]")
                )
        if p.ground_truth is not None and not (0.0 <= p.ground_truth <= 10.0):
            out.append(Violation(f"paper {p.id}", f"ground_truth={p.ground_truth!r} outside [0, 10]"))

    author_ids: set[str] = set()
    for a in d.authors:
        if a.id in author_ids:
            out.append(Violation(f"author {a.id}", "duplicate author id"))
        author_ids.add(a.id)

    for a, p in sorted(d.authorship):
        if a not in author_ids:
            out.append(Violation(f"authorship ({a}, {p})", f"unknown author {a!r}"))
        if p not in seen:
            out.append(Violation(f"authorship ({a}, {p})", f"unknown paper {p!r}"))

    for a in d.authors:
        if a.ranking is None:
            continue
        listed: set[str] = set()
        for g in a.ranking.groups:
            if not g:
                out.append(Violation(f"author {a.id}", "empty tie-group in ranking"))
            for pid in g:
                if pid in listed:
                    out.append(Violation(f"author {a.id}", f"paper {pid!r} ranked twice"))
                listed.add(pid)
                if pid not in seen:
                    out.append(Violation(f"author {a.id}", f"ranking references unknown paper {pid!r}"))
                elif (a.id, pid) not in d.authorship:
                    out.append(Violation(f"author {a.id}", f"ranks paper {pid!r} they did not author"))
    return out


def _is_int(x: object) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def ranking_lengths(d: Dataset) -> dict[str, int]:
    return {aid: len(r) for aid, r in d.rankings().items()}

