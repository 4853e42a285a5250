import numpy as np
import pytest

from isocal.io import PLAN_FIELDS, csv_text, plan_rows
from isocal.model import Decision
from isocal.policy import (
    EmergencyPlan,
    Indicator,
    emergency_count,
    emergency_plan,
    plan_from_quantiles,
    rank_position_stats,
    residual_quantiles,
    unexpected_outcome_predictor,
)
from oracles import dataset


def test_distinct_residuals_give_a_permutation_of_rank_fractions():
    res = {f"p{i}": v for i, v in enumerate([0.3, -2.0, 1.1, -0.05, 0.7])}
    q = residual_quantiles(res)
    assert sorted(q.values()) == pytest.approx([0.2, 0.4, 0.6, 0.8, 1.0])
    # ranks by magnitude: 0.05, 0.3, 0.7, 1.1, 2.0
    assert q == pytest.approx({"p3": 0.2, "p0": 0.4, "p4": 0.6, "p2": 0.8, "p1": 1.0})


def test_equal_residuals_share_the_average_rank():
    q = residual_quantiles({p: 0.5 for p in "abcd"})
    assert list(q.values()) == pytest.approx([5 / 8] * 4)
    with pytest.raises(ValueError):
        residual_quantiles({})


def test_ten_distinct_residuals_split_three_four_three():
    res = {f"p{i}": (-1) ** i * (i + 1) * 0.1 for i in range(10)}
    plan = plan_from_quantiles(res, residual_quantiles(res))
    counts = sorted(e.emergency_reviewers for e in plan.entries)
    assert counts == [0] * 3 + [1] * 4 + [2] * 3
    assert plan.mean_reviewers() == pytest.approx(4.0)
    # the largest magnitudes get two extra reviewers
    assert {e.paper_id for e in plan.entries if e.emergency_reviewers == 2} == {"p7", "p8", "p9"}


def test_cut_points():
    assert [emergency_count(q) for q in (0.1, 0.3, 0.31, 0.7, 0.71, 1.0)] == [0, 0, 1, 1, 2, 2]


def test_uniform_quantiles_average_four_reviewers():
    n = 10_000
    rng = np.random.default_rng(0)
    q = {f"p{i}": v for i, v in enumerate(rng.uniform(0, 1, n))}
    plan = plan_from_quantiles(q, q)
    assert abs(plan.mean_reviewers() - 4.0) <= 0.05
    extra = sum(e.emergency_reviewers for e in plan.entries)
    assert 0.9 * n <= extra <= 1.1 * n


def test_plan_on_dataset():
    d = dataset({"p1": 8, "p2": 7, "p3": 4, "p4": 3, "solo": 5}, {"a1": [["p1"], ["p3"], ["p2"], ["p4"]], "a2": [["solo"]]})
    plan = emergency_plan(d)
    by = {e.paper_id: e for e in plan.entries}
    assert not by["solo"].participating and by["solo"].total == 4 and by["solo"].quantile is None
    assert all(by[p].initial_reviewers == 3 for p in ("p1", "p2", "p3", "p4"))
    # |residuals| = (0, 1.5, 1.5, 0): ranks 1.5, 3.5, 3.5, 1.5 over 4
    assert by["p2"].quantile == by["p3"].quantile == pytest.approx(0.875)
    assert by["p1"].quantile == pytest.approx(0.375)
    assert by["p2"].emergency_reviewers == 2 and by["p1"].emergency_reviewers == 1


def test_no_rankings_means_four_initial_reviewers_everywhere():
    plan = emergency_plan(dataset({"a": 3, "b": 9}))
    assert all(not e.participating and e.total == 4 for e in plan.entries)
    assert np.isnan(plan.mean_reviewers())


def test_serialized_plan_hides_residual_sign(worked_example):
    plan = emergency_plan(worked_example)
    text = csv_text(PLAN_FIELDS, plan_rows(plan))
    assert text.splitlines()[0] == "paper_id,participating,initial,emergency,quantile"
    assert "-" not in text and "1.5" not in text
    assert all(not f.startswith("residual") for f in PLAN_FIELDS)
    assert isinstance(plan, EmergencyPlan)


def test_residual_indicator_and_id_tie_break():
    # author x: p2 and p1 pool to 6 (residuals +3, -3); author y's ranking already agrees
    d = dataset(
        reviews={"p1": [9, 9, 9], "p2": [3, 3, 3], "p3": [5, 5, 5], "q1": [8, 2, 8], "q2": [4, 4, 4]},
        rankings={"x": [["p2"], ["p1"], ["p3"]], "y": [["q1"], ["q2"]]},
    )
    res = unexpected_outcome_predictor(d, {"p1", "q2"}, Indicator.RESIDUAL)
    assert res.predictions == {"x": "p1", "y": "q1"}
    assert (res.correct, res.total) == (1, 2)
    var = unexpected_outcome_predictor(d, {"q1"}, "variance")
    assert var.predictions == {"y": "q1"} and var.accuracy == 1.0


def test_constructed_flags_on_max_residual_papers():
    rng = np.random.default_rng(3)
    reviews, rankings, flagged = {}, {}, set()
    for a in range(40):
        ids = [f"a{a}p{i}" for i in range(4)]
        scores = rng.integers(2, 9, size=4)
        for p, s in zip(ids, scores):
            reviews[p] = [int(s)] * 3
        order = list(rng.permutation(ids))
        rankings[f"a{a}"] = [[p] for p in order]
    d = dataset(reviews=reviews, rankings=rankings)
    from isocal import isotonic_residuals

    res, _ = isotonic_residuals(d)
    for a in range(40):
        ids = [f"a{a}p{i}" for i in range(4)]
        flagged.add(min(ids, key=lambda p: (-abs(res[p]), p)))
    assert unexpected_outcome_predictor(d, flagged, "residual").accuracy == 1.0
    # identical reviews per paper: variance ties everywhere, so the guess is the smallest id
    var = unexpected_outcome_predictor(d, flagged, "variance")
    assert var.accuracy == pytest.approx(sum(f.endswith("p0") for f in flagged) / 40)


def test_confidence_indicator_picks_lowest_confidence():
    from isocal import Author, Dataset, Paper, Ranking, Review

    d = Dataset.build(
        [Paper("a", (Review(5, 4), Review(6, 5))), Paper("b", (Review(5, 1), Review(6, 2)))],
        [Author("x", ranking=Ranking.from_order("ab"))],
        [("x", "a"), ("x", "b")],
    )
    assert unexpected_outcome_predictor(d, {"b"}, "confidence").accuracy == 1.0


def _decided(decisions, rankings):
    kw = {p: {"decision": Decision(v)} for p, v in decisions.items()}
    return dataset({p: 5 for p in decisions}, rankings, **kw)


def test_top_papers_accepted_bottom_rejected():
    d = _decided(
        {"a1": "oral", "a2": "rejected", "b1": "poster", "b2": "rejected", "c1": "oral", "c2": "withdrawn"},
        {"x": [["a1"], ["a2"]], "y": [["b1"], ["b2"]], "z": [["c1"], ["c2"]]},
    )
    t = rank_position_stats(d)
    hi, lo = t.shares("highest"), t.shares("lowest")
    assert hi == pytest.approx({"withdrawn": 0, "rejected": 0, "poster": 100 / 3, "oral": 200 / 3})
    assert lo["rejected"] == pytest.approx(200 / 3) and lo["oral"] == 0
    assert sum(hi.values()) == pytest.approx(100, abs=0.01) and sum(lo.values()) == pytest.approx(100, abs=0.01)
    assert t.first_ranked_share == 1.0 and t.designated_count == 2


def test_award_counts_as_oral_and_chi_square_is_reported():
    d = _decided(
        {"a1": "award", "a2": "poster", "a3": "rejected", "b1": "poster", "b2": "rejected"},
        {"x": [["a1"], ["a2"], ["a3"]], "y": [["b2"], ["b1"]]},
    )
    t = rank_position_stats(d)
    assert t.highest_counts == {"withdrawn": 0, "rejected": 1, "poster": 0, "oral": 1}
    assert t.lowest_counts == {"withdrawn": 0, "rejected": 1, "poster": 1, "oral": 0}
    assert np.isnan(t.p_values["withdrawn"])
    assert 0 < t.p_values["oral"] <= 1
    assert rank_position_stats(d, designated={"a2", "b1"}).first_ranked_share == 0.0
