import json

import pytest

from isocal import Author, Dataset, Paper, Ranking, Review, validate_dataset
from isocal.io import DatasetFormatError, dataset_from_dict, dataset_to_dict, dump_dataset, load_dataset
from isocal.model import Decision, Role, ranking_lengths
from oracles import dataset


def test_well_formed_dataset_has_no_violations():
    d = dataset({"p1": 5, "p2": 6}, {"a": [["p1"], ["p2"]]})
    assert validate_dataset(d) == []


def test_unknown_ranked_paper_is_named():
    d = Dataset.build(
        [Paper("p1", (Review(5),))],
        [Author("a", ranking=Ranking.from_order(["p1", "pX"]))],
        [("a", "p1")],
    )
    violations = validate_dataset(d)
    assert len(violations) == 1
    assert "pX" in str(violations[0])


def test_out_of_range_score_names_paper_and_field():
    d = dataset({"p1": 11})
    (v,) = validate_dataset(d)
    assert "p1" in str(v) and "score" in str(v)


@pytest.mark.parametrize(
    "papers, authors, pairs, needle",
    [
        ([Paper("p"), Paper("p")], [], [], "duplicate paper"),
        ([Paper("p", (Review(5, 6),))], [], [], "confidence"),
        ([Paper("p", (Review(0),))], [], [], "score"),
        ([Paper("p", ground_truth=11.0)], [], [], "ground_truth"),
        ([Paper("p")], [Author("a"), Author("a")], [], "duplicate author"),
        ([Paper("p")], [], [("ghost", "p")], "unknown author"),
        ([Paper("p")], [Author("a")], [("a", "q")], "unknown paper"),
        ([Paper("p"), Paper("q")], [Author("a", ranking=Ranking.from_order(["p", "q"]))], [("a", "p")], "did not author"),
        ([Paper("p")], [Author("a", ranking=Ranking.from_groups([["p"], ["p"]]))], [("a", "p")], "twice"),
        ([Paper("p")], [Author("a", ranking=Ranking(((), ("p",))))], [("a", "p")], "empty"),
    ],
)
def test_each_invariant_is_reported(papers, authors, pairs, needle):
    violations = validate_dataset(Dataset.build(papers, authors, pairs))
    assert any(needle in str(v) for v in violations), violations


def test_synthetic_papers_may_score_zero():
    assert validate_dataset(Dataset.build([Paper("p", (Review(0),), ground_truth=0.5)], [], [])) == []


def test_validation_is_idempotent_and_pure():
    d = dataset({"p1": 11, "p2": 5}, {"a": [["p1"], ["p2", "p3"]]})
    before = dataset_to_dict(d)
    assert validate_dataset(d) == validate_dataset(d)
    assert dataset_to_dict(d) == before


def test_ranking_operations():
    r = Ranking.from_groups([["a", "b"], ["c"]])
    assert len(r) == 3 and "b" in r and "z" not in r
    assert r.ids == ["a", "b", "c"]
    assert r.reversed().to_lists() == [["c"], ["a", "b"]]
    assert Ranking.from_order("abc").restrict({"a", "c"}).to_lists() == [["a"], ["c"]]
    assert r.restrict({"c"}).to_lists() == [["c"]]
    assert r.restrict(r.ids) == r
    assert Ranking.from_order(["a", "b"]).reversed() == Ranking.from_order(["b", "a"])


def test_dataset_views(worked_example):
    d = worked_example
    assert d.papers_of["a1"] == ["p1", "p2", "p3", "p4"]
    assert d.authors_of["p3"] == ["a1"]
    assert d.mean_scores() == {"p1": 8.0, "p2": 7.0, "p3": 4.0, "p4": 3.0}
    assert ranking_lengths(d) == {"a1": 4}
    assert d.rankings(min_length=5) == {}
    assert d.with_rankings({"a1": None}).rankings() == {}


def test_mean_scores_skip_unreviewed_papers():
    d = Dataset.build([Paper("p", (Review(4), Review(7))), Paper("q")], [], [])
    assert d.mean_scores() == {"p": 5.5}
    with pytest.raises(ValueError):
        d.paper_by_id["q"].mean_score()


def test_file_round_trip_preserves_validation(tmp_path):
    d = Dataset.build(
        [Paper("p1", (Review(5, 3), Review(7)), Decision.ORAL), Paper("p2", (Review(11),))],
        [Author("a", Role.REVIEWER, Ranking.from_groups([["p1", "p2"]])), Author("b", Role.AREA_CHAIR)],
        [("a", "p1"), ("a", "p2"), ("b", "p2")],
    )
    path = tmp_path / "d.json"
    dump_dataset(d, path)
    back = load_dataset(path)
    assert back == d
    assert validate_dataset(back) == validate_dataset(d)


def test_unknown_fields_are_rejected():
    doc = {"papers": [{"id": "p", "reviews": [], "extra": 1}], "authors": [], "authorship": []}
    with pytest.raises(DatasetFormatError, match="extra"):
        dataset_from_dict(doc)


def test_missing_top_level_key_is_rejected():
    with pytest.raises(DatasetFormatError):
        dataset_from_dict(json.loads('{"papers": [], "authors": []}'))
