"""Order-constrained L2 projection of review scores onto an author's ranking."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from isocal.model import Dataset, Ranking

BRUTE_FORCE_MAX = 10
_ALL_ORDERINGS_MAX = 6


class MissingScoreError(KeyError):
    pass


@dataclass(frozen=True)
class IsotonicFit:
    values: dict[str, float]
    objective: float

    def __getitem__(self, paper_id: str) -> float:
        return self.values[paper_id]


def pava(values: Sequence[float], weights: Sequence[float] | None = None) -> np.ndarray:
    """Weighted L2 projection onto non-increasing sequences.

    Pooled blocks take the weighted mean of their members.

    >>> pava([8, 4, 7, 3]).tolist()
    [8.0, 5.5, 5.5, 3.0]
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("pava needs a non-empty 1-D sequence")
    if np.isnan(y).any():
        raise ValueError("pava input contains NaN")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError(f"weights length {w.size} != values length {y.size}")
        if np.isnan(w).any() or not (w > 0).all():
            raise ValueError("weights must be strictly positive")
    return np.asarray(_pava_decreasing(y.tolist(), w.tolist()))


def _pava_decreasing(y: list[float], w: list[float]) -> list[float]:
    # stack of blocks: [weighted sum, total weight, length]
    sums: list[float] = []
    wts: list[float] = []
    lens: list[int] = []
    for yi, wi in zip(y, w):
        s, t, n = yi * wi, wi, 1
        while sums and sums[-1] / wts[-1] < s / t:
            s += sums.pop()
            t += wts.pop()
            n += lens.pop()
        sums.append(s)
        wts.append(t)
        lens.append(n)
    out: list[float] = []
    for s, t, n in zip(sums, wts, lens):
        out.extend([s / t] * n)
    return out


def chain_order(scores: Mapping[str, float], ranking: Ranking) -> list[str]:
    """Linearize tie-groups: descending score inside a group, id breaks ties."""
    order: list[str] = []
    for g in ranking.groups:
        for pid in g:
            if pid not in scores:
                raise MissingScoreError(f"ranked paper {pid!r} has no score")
        order.extend(sorted(g, key=lambda p: (-scores[p], p)))
    return order


def project_isotonic(scores: Mapping[str, float], ranking: Ranking) -> IsotonicFit:
    """Project ``scores`` onto the cone induced by ``ranking``.

    Unranked ids pass through unchanged.
    """
    order = chain_order(scores, ranking)
    y = [float(scores[p]) for p in order]
    fitted = _pava_decreasing(y, [1.0] * len(y)) if y else []
    values = {p: float(v) for p, v in scores.items()}
    values.update(zip(order, fitted))
    objective = math.fsum((a - b) ** 2 for a, b in zip(y, fitted))
    return IsotonicFit(values, objective)


def satisfies_ranking(values: Mapping[str, float], ranking: Ranking, tol: float = 1e-12) -> bool:
    groups = [g for g in ranking.groups if g]
    for hi, lo in zip(groups, groups[1:]):
        if min(values[p] for p in hi) < max(values[p] for p in lo) - tol:
            return False
    return True


def _level_sets(n: int):
    """Every split of a chain of length n into contiguous blocks."""
    for cuts in itertools.product((False, True), repeat=n - 1):
        blocks, start = [], 0
        for i in range(n):
            if i == n - 1 or cuts[i]:
                blocks.append((start, i + 1))
                start = i + 1
        yield blocks


def _fit_blocks(y: Sequence, blocks) -> list | None:
    """Block means, or None if they increase somewhere."""
    fitted = []
    for lo, hi in blocks:
        fitted.extend([sum(y[lo:hi]) / (hi - lo)] * (hi - lo))
    if any(a < b for a, b in zip(fitted, fitted[1:])):
        return None
    return fitted


def brute_force_project(scores: Mapping[str, float], ranking: Ranking) -> IsotonicFit:
    """Reference solver for small rankings, by exhaustive enumeration.

    Up to six ranked papers every within-group ordering is tried, so the
    result does not rely on the descending-score linearization. Candidates
    whose float objectives are within rounding of the best are re-ranked in
    exact rational arithmetic.
    """
    n = len(ranking)
    if n > BRUTE_FORCE_MAX:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX} ranked papers, got {n}")
    for pid in ranking.ids:
        if pid not in scores:
            raise MissingScoreError(f"ranked paper {pid!r} has no score")
    values = {p: float(v) for p, v in scores.items()}
    if n == 0:
        return IsotonicFit(values, 0.0)
    if n <= _ALL_ORDERINGS_MAX:
        combos = itertools.product(*(itertools.permutations(g) for g in ranking.groups))
        orders = [[p for g in combo for p in g] for combo in combos]
    else:
        orders = [chain_order(scores, ranking)]

    splits = list(_level_sets(n))
    found = []
    for order in orders:
        y = [float(scores[p]) for p in order]
        for blocks in splits:
            fitted = _fit_blocks(y, blocks)
            if fitted is not None:
                found.append((math.fsum((a - b) ** 2 for a, b in zip(y, fitted)), order, blocks))
    best = min(obj for obj, _, _ in found)
    tol = 1e-9 * (1.0 + math.fsum(float(v) ** 2 for v in (scores[p] for p in ranking.ids)))
    exact_best = None
    for obj, order, blocks in found:
        if obj > best + tol:
            continue
        q = [Fraction(float(scores[p])) for p in order]
        fitted = _fit_blocks(q, blocks)
        if fitted is None:
            continue
        exact = sum((a - b) ** 2 for a, b in zip(q, fitted))
        if exact_best is None or exact < exact_best[0]:
            exact_best = (exact, order, fitted)
    exact, order, fitted = exact_best
    values.update(zip(order, (float(v) for v in fitted)))
    return IsotonicFit(values, float(exact))


def isotonic_residuals(d: Dataset, strategy="simple") -> tuple[dict[str, float], list[str]]:
    """Isotonic score minus mean review score, per paper.

    Returns the residuals and the ids of papers skipped for having no reviews.
    """
    from isocal.aggregation import calibrate

    means = d.mean_scores()
    skipped = sorted(p.id for p in d.papers if not p.reviews)
    result = calibrate(d, means, strategy)
    return {p: result.scores[p] - means[p] for p in sorted(means)}, skipped
