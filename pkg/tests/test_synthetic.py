import math
from collections import Counter

import numpy as np
import pytest

from isocal import Strategy, calibrate, validate_dataset
from isocal.synthetic import (
    VENUE_TAILS,
    AuthorGraphConfig,
    ExperimentKind,
    InfeasibleGraphError,
    RankingModel,
    ReviewerModel,
    SyntheticConfig,
    assign_decisions_by_truth,
    bias_term,
    default_config,
    gen_authorship_graph,
    gen_ground_truth,
    gen_review,
    gen_reviews,
    generate_dataset,
    holdout_against_truth,
    plackett_luce_probability,
    realized_tails,
    round_half_away,
    run_replications,
    run_synthetic_experiment,
    sample_plackett_luce,
    sigmoid,
)
from oracles import pl_exact_distribution

N = 100_000


def test_rounding_is_half_away_from_zero():
    assert round_half_away([0.5, 1.5, 2.5, 2.49, -0.5]).tolist() == [1, 2, 3, 2, -1]


def test_ground_truth_mean_and_range():
    t = gen_ground_truth(N, SyntheticConfig(), np.random.default_rng(0))
    assert abs(t.mean() - 5) <= 0.02
    assert t.min() >= 0 and t.max() <= 10
    assert np.all(gen_ground_truth(50, SyntheticConfig(truth_scale=0.0), np.random.default_rng(0)) == 5)


def test_scale_reading():
    assert SyntheticConfig().truth_sd == 1.25
    assert SyntheticConfig(scale_is_variance=True).noise_sd == pytest.approx(math.sqrt(1.25))
    with pytest.raises(ValueError):
        SyntheticConfig(reviews_per_paper=0)


def test_bold_equals_unbiased_at_midpoint_and_noise_free_is_exact():
    assert bias_term(5.0) == 0.0
    rng = np.random.default_rng(1)
    assert gen_review(5.0, "bold", rng, noise_sd=0.0) == 5
    assert gen_review(5.0, "unbiased", rng, noise_sd=0.0) == 5
    assert gen_review(7.3, "unbiased", rng, noise_sd=0.0) == 7


def test_bold_minus_conservative_gap():
    rng = np.random.default_rng(2)
    bold = gen_reviews(np.full(N, 8.0), ReviewerModel.BOLD, rng, 1.25)
    cons = gen_reviews(np.full(N, 8.0), ReviewerModel.CONSERVATIVE, rng, 1.25)
    assert abs((bold.mean() - cons.mean()) - 2 * (sigmoid(3.0) - 0.5)) <= 0.05


def test_reviews_are_integers_in_range():
    rng = np.random.default_rng(3)
    s = gen_reviews(rng.uniform(0, 10, 5000), ReviewerModel.UNBIASED, rng, 3.0)
    assert s.dtype.kind == "i" and s.min() >= 0 and s.max() <= 10


def _first_share(scores, n=N, seed=4):
    rng = np.random.default_rng(seed)
    return sum(sample_plackett_luce(scores, rng)[0] == 0 for _ in range(n)) / n


def test_plackett_luce_equal_scores():
    assert abs(_first_share([0.0, 0.0]) - 0.5) <= 0.01


def test_plackett_luce_odds():
    assert abs(_first_share([math.log(3), 0.0]) - 0.75) <= 0.01


def test_plackett_luce_three_items_total_variation():
    scores = [1.0, 0.3, -0.5]
    rng = np.random.default_rng(5)
    counts = Counter(tuple(sample_plackett_luce(scores, rng)) for _ in range(N))
    exact = pl_exact_distribution(scores)
    tv = 0.5 * sum(abs(counts[o] / N - p) for o, p in exact.items())
    assert tv <= 0.02
    for order, p in exact.items():
        assert plackett_luce_probability(scores, order) == pytest.approx(p, rel=1e-12)


def test_plackett_luce_shift_invariance_and_stability():
    scores = [0.2, 3.1, 1.7, 2.2, 0.0]
    a = [sample_plackett_luce(scores, np.random.default_rng(s)) for s in range(50)]
    b = [sample_plackett_luce([x + 700.0 for x in scores], np.random.default_rng(s)) for s in range(50)]
    assert a == b
    with pytest.raises(ValueError):
        sample_plackett_luce([1.0, float("inf")], np.random.default_rng(0))


def test_full_scale_graph_matches_venue_tails():
    cfg = AuthorGraphConfig()
    d = gen_authorship_graph(cfg, np.random.default_rng(6))
    counts = [len(v) for v in d.papers_of.values()]
    tails = realized_tails(counts, [t for t, _ in VENUE_TAILS])
    assert 4054 <= tails[2] <= 4955
    for t, target in VENUE_TAILS:
        assert abs(tails[t] - target) <= max(0.1 * target, 0.5)
    assert all(d.authors_of[p.id] for p in d.papers)
    assert len(d.papers) == 6538 and len(d.authors) == 18535


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_scaled_graph_tails_scale_proportionally(seed):
    cfg = AuthorGraphConfig.scaled(0.1)
    d = gen_authorship_graph(cfg, np.random.default_rng(seed))
    tails = realized_tails([len(v) for v in d.papers_of.values()], [t for t, _ in cfg.tails])
    for t, target in cfg.tails:
        assert abs(tails[t] - target) <= max(0.1 * target, 0.5)
    assert all(d.authors_of[p.id] for p in d.papers)


def test_single_paper_authors_make_calibration_inert():
    cfg = AuthorGraphConfig(n_authors=50, n_papers=50, tails=((2, 0),))
    d = generate_dataset(SyntheticConfig(graph=cfg), seed=0)
    assert d.rankings(min_length=2) == {}
    assert calibrate(d, d.mean_scores(), "simple").scores == d.mean_scores()


def test_infeasible_graph_reports_realized_tails():
    cfg = AuthorGraphConfig(n_authors=10, n_papers=1000, tails=((2, 9), (5, 9)), max_attempts=3)
    with pytest.raises(InfeasibleGraphError) as err:
        gen_authorship_graph(cfg, np.random.default_rng(0))
    assert set(err.value.realized) == {2, 5}
    with pytest.raises(InfeasibleGraphError):
        AuthorGraphConfig(tails=((2, 5), (5, 9))).check()


def test_generated_dataset_is_valid_and_seeded():
    cfg = default_config("noisy", 0.02)
    d = generate_dataset(cfg, seed=9)
    assert validate_dataset(d) == []
    assert d == generate_dataset(cfg, seed=9)
    assert all(0 <= s <= 10 for p in d.papers for s in p.scores)
    assert all(0.0 <= p.ground_truth <= 10.0 for p in d.papers)
    assert max(len(r) for r in d.rankings().values()) <= 17


def test_truth_order_without_noise_is_a_fixed_point():
    cfg = default_config("biased", 0.02, reviewer_model=ReviewerModel.UNBIASED, noise_scale=0.0, reviews_per_paper=1)
    d = generate_dataset(cfg, seed=1)
    s = d.mean_scores()
    for strategy in Strategy:
        assert calibrate(d, s, strategy).scores == s


def test_uninformative_rankings_give_no_systematic_gain():
    cfg = default_config("noisy", 0.05, ranking_sharpness=0.0)
    rep = run_replications("noisy", cfg, range(8), strategies=["simple"]).pooled["simple"]
    lo, hi = rep.mse_ci99
    assert lo <= 0.0 or rep.mse_improvement < 2.0


def test_outlier_run_has_noisier_raw_scores_than_baseline():
    cfg = default_config("outlier", 0.05)
    run = run_synthetic_experiment("outlier", cfg, seed=3)
    for name, rep in run.reports.items():
        assert rep.raw_mse > run.baseline[name].raw_mse
        assert rep.target_kind == "proxy"


def test_replications_are_order_independent():
    cfg = default_config("biased", 0.02)
    serial = run_replications("biased", cfg, [0, 1, 2])
    parallel = run_replications("biased", cfg, [0, 1, 2], n_jobs=2)
    for name, rep in serial.pooled.items():
        assert parallel.pooled[name].ids == rep.ids
        assert np.max(np.abs(parallel.pooled[name].iso - rep.iso)) <= 1e-12


def test_holdout_against_truth_shares_estimates():
    d = generate_dataset(default_config("noisy", 0.02), seed=2)
    proxy, true = holdout_against_truth(d, seed=0)
    assert proxy.ids == true.ids
    assert np.array_equal(proxy.iso, true.iso)
    assert true.target_kind == "truth"


def test_decisions_follow_truth():
    d = assign_decisions_by_truth(generate_dataset(default_config("noisy", 0.02), seed=0), 5)
    orals = sorted((p for p in d.papers if p.decision.value == "oral"), key=lambda p: -p.ground_truth)
    rest = max(p.ground_truth for p in d.papers if p.decision.value != "oral")
    assert len(orals) == 5 and orals[-1].ground_truth >= rest


def test_experiment_kinds_pick_their_models():
    assert default_config("noisy").ranking_model is RankingModel.PLACKETT_LUCE
    assert default_config("biased").reviewer_model is ReviewerModel.BOLD_CONSERVATIVE_MIX
    assert default_config(ExperimentKind.OUTLIER_SCORE).reviewer_model is ReviewerModel.WITH_OUTLIER
