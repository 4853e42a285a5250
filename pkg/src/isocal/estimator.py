"""scikit-learn style wrapper around the multi-author calibration."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from isocal.aggregation import Strategy, calibrate
from isocal.model import Dataset, validate_dataset


class InvalidDatasetError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations[:20])
        more = f"\n  ... {len(self.violations) - 20} more" if len(self.violations) > 20 else ""
        super().__init__(f"{len(self.violations)} dataset violation(s):\n{lines}{more}")


def check_dataset(d: Dataset) -> Dataset:
    if not isinstance(d, Dataset):
        raise TypeError(f"expected a Dataset, got {type(d).__name__}")
    violations = validate_dataset(d)
    if violations:
        raise InvalidDatasetError(violations)
    return d


def check_scores(scores, paper_ids) -> dict[str, float]:
    """Mapping or 1-D array aligned with ``paper_ids`` -> {id: score}.

    NaN entries in an array mean "no score" and are left out.
    """
    if isinstance(scores, Mapping):
        out = {str(k): float(v) for k, v in scores.items()}
    else:
        arr = np.asarray(scores, dtype=float)
        if arr.ndim != 1 or arr.size != len(paper_ids):
            raise ValueError(f"expected {len(paper_ids)} scores aligned with paper_ids_, got shape {arr.shape}")
        out = {p: float(v) for p, v in zip(paper_ids, arr) if not np.isnan(v)}
    bad = [p for p, v in out.items() if not np.isfinite(v)]
    if bad:
        raise ValueError(f"non-finite scores for papers {bad[:5]}")
    return out


class IsotonicMechanism(TransformerMixin, BaseEstimator):
    """Calibrate review scores with the authors' rankings of their papers.

    Parameters
    ----------
    strategy : {"simple", "greedy", "multiowner"}
        How projections from authors with overlapping papers are combined.
    validate : bool
        Check dataset invariants in ``fit``.

    Attributes
    ----------
    paper_ids_ : list of str
        Paper ids of the fitted dataset, sorted; array input to ``transform``
        is aligned with this order.
    dataset_ : Dataset
    contributors_ : dict
        Authors whose rankings shaped each paper in the last ``transform``.

    Examples
    --------
    >>> from isocal import Author, Dataset, Paper, Ranking
    >>> d = Dataset.build(
    ...     [Paper(p) for p in ("p1", "p2", "p3", "p4")],
    ...     [Author("a", ranking=Ranking.from_order(["p1", "p3", "p2", "p4"]))],
    ...     [("a", p) for p in ("p1", "p2", "p3", "p4")],
    ... )
    >>> IsotonicMechanism().fit(d).transform([8, 7, 4, 3]).tolist()
    [8.0, 5.5, 5.5, 3.0]
    """

    def __init__(self, strategy: str = "simple", validate: bool = True):
        self.strategy = strategy
        self.validate = validate

    def fit(self, X: Dataset, y=None):
        if self.validate:
            check_dataset(X)
        Strategy.parse(self.strategy)
        self.dataset_ = X
        self.paper_ids_ = sorted(p.id for p in X.papers)
        return self

    def transform(self, X):
        """Calibrated scores.

        ``X`` may be a mapping {paper id: score}, a 1-D array aligned with
        ``paper_ids_`` (returns an array, NaN passes through), or a Dataset
        (calibrates its mean review scores, returns a dict).
        """
        check_is_fitted(self, "dataset_")
        if isinstance(X, Dataset):
            scores = X.mean_scores()
        else:
            scores = check_scores(X, self.paper_ids_)
        result = calibrate(self.dataset_, scores, self.strategy)
        self.contributors_ = result.contributors
        if isinstance(X, (Mapping, Dataset)):
            return dict(result.scores)
        return np.array([result.scores.get(p, np.nan) for p in self.paper_ids_])

    def residuals(self, X) -> dict[str, float]:
        check_is_fitted(self, "dataset_")
        scores = X.mean_scores() if isinstance(X, Dataset) else check_scores(X, self.paper_ids_)
        calibrated = calibrate(self.dataset_, scores, self.strategy).scores
        return {p: calibrated[p] - scores[p] for p in sorted(scores)}
