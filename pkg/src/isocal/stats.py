"""Test statistics used in the evaluation: paired t, Pearson chi-square,
correlation and normal-approximation intervals.

The statistics are computed here; only the reference distributions
(Student t, chi-square, normal) come from scipy.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import stats as _dist


def paired_t_test_one_sided(a: Sequence[float], b: Sequence[float]) -> float:
    """p-value for H1: mean(a) > mean(b), paired.

    With zero spread in the differences the p-value is 0.5 when their mean is
    zero, otherwise 0 or 1 depending on the sign.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    n = x.size
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = x - y
    mean = math.fsum(d) / n
    var = math.fsum((d - mean) ** 2) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return 0.5
        return 0.0 if mean > 0 else 1.0
    t = mean / math.sqrt(var / n)
    return float(_dist.t.sf(t, n - 1))


def paired_t_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(d.mean() / (d.std(ddof=1) / math.sqrt(d.size)))


def chi_square_statistic(counts) -> tuple[float, int]:
    table = np.asarray(counts, dtype=float)
    if table.ndim != 2 or table.shape[0] != 2 or table.shape[1] < 2:
        raise ValueError("expected a 2 x k table with k >= 2")
    if (table < 0).any():
        raise ValueError("counts must be non-negative")
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise ValueError("zero marginal total in contingency table")
    expected = np.outer(rows, cols) / table.sum()
    stat = float(((table - expected) ** 2 / expected).sum())
    return stat, table.shape[1] - 1


def chi_square_2xk(counts) -> float:
    """Pearson chi-square p-value for a 2 x k table, no continuity correction."""
    stat, dof = chi_square_statistic(counts)
    return float(_dist.chi2.sf(stat, dof))


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    u = np.asarray(x, dtype=float)
    v = np.asarray(y, dtype=float)
    if u.shape != v.shape or u.size < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    du = u - u.mean()
    dv = v - v.mean()
    su = math.sqrt(float(du @ du))
    sv = math.sqrt(float(dv @ dv))
    if su == 0.0 or sv == 0.0:
        raise ValueError("zero variance sample")
    return max(-1.0, min(1.0, float(du @ dv) / (su * sv)))


def mse_reduction_ci(diffs: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval for the mean of per-paper error differences.

    Uses the plain (1/n) standard deviation.
    """
    d = np.asarray(diffs, dtype=float)
    if d.size < 2:
        raise ValueError("need at least two differences")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    mean = math.fsum(d) / d.size
    sd = math.sqrt(math.fsum((d - mean) ** 2) / d.size)
    half = float(_dist.norm.ppf((1.0 + level) / 2.0)) * sd / math.sqrt(d.size)
    return mean - half, mean + half
