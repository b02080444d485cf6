import csv

import numpy as np
import pytest

from auprcopt.core import DomainError, EmptyClassError, ScoreSet
from auprcopt.metrics import PRCurve, ap_loss, empirical_auprc, pr_curve, surrogate_risk
from auprcopt.surrogate import SurrogateParams, ell1, ell2, sigma


def rank_oracle(pos, neg, prior):
    """Brute-force precision averaging: at each positive's score, count
    everything scoring >= it (ties retrieved) and average the weighted
    precision."""
    pos = np.asarray(pos, float)
    neg = np.asarray(neg, float)
    total = 0.0
    for c in pos:
        tpr = np.sum(pos >= c) / pos.size
        fpr = np.sum(neg >= c) / neg.size
        total += prior * tpr / (prior * tpr + (1 - prior) * fpr)
    return total / pos.size


def scalar_surrogate_oracle(pos, neg, params):
    """Independent per-threshold scalar evaluation of the ratio risk."""
    terms = []
    for c in pos:
        a = np.mean([ell1(c - s, params.tau1) for s in neg])
        b = np.mean([ell2(c - s, params.tau2) for s in pos])
        u = params.pos_weight * a / max(b, params.denom_floor)
        terms.append(sigma(u))
    return float(np.mean(terms))


def test_perfect_ranking_is_one():
    assert empirical_auprc(ScoreSet([2.0, 3.0], [1.0]), 2 / 3) == 1.0


def test_rank_example_five_sixths():
    got = empirical_auprc(ScoreSet([3.0, 1.0], [2.0]), 2 / 3)
    assert got == pytest.approx(5 / 6, abs=1e-15)


def test_single_positive_ranked_last():
    assert empirical_auprc(ScoreSet([1.0], [2.0]), 0.5) == pytest.approx(0.5, abs=1e-15)


def test_matches_rank_oracle_with_ties():
    gen = np.random.default_rng(99)
    aucs, priors = [], []
    for _ in range(1000):
        n_pos = int(gen.integers(1, 25))
        n_neg = int(gen.integers(1, 25))
        # coarse integer grid forces plenty of ties
        pos = gen.integers(0, 6, size=n_pos).astype(float)
        neg = gen.integers(0, 6, size=n_neg).astype(float)
        prior = n_pos / (n_pos + n_neg)
        got = empirical_auprc(ScoreSet(pos, neg), prior)
        assert got == pytest.approx(rank_oracle(pos, neg, prior), abs=1e-12)
        aucs.append(got)
        priors.append(prior)
    # random-classifier floor holds on average (not per instance)
    assert np.mean(aucs) >= np.mean(priors)


def test_invariant_under_monotone_transform():
    gen = np.random.default_rng(5)
    pos = gen.normal(size=12)
    neg = gen.normal(size=30)
    base = empirical_auprc(ScoreSet(pos, neg), 0.3)
    warped = empirical_auprc(ScoreSet(np.exp(pos) + pos, np.exp(neg) + neg), 0.3)
    assert warped == pytest.approx(base, abs=1e-12)


def test_empty_class_rejected():
    with pytest.raises(EmptyClassError):
        ScoreSet([], [1.0])
    with pytest.raises(DomainError):
        empirical_auprc(ScoreSet([1.0], [0.0]), 1.0)


def test_surrogate_risk_hand_value():
    params = SurrogateParams(tau1=1.0, tau2=0.5, prior_pi=1 / 3)
    # single positive at 0.5: numerator mean(l1(0.5), l1(-0.5)) = 0.625,
    # denominator l2(0) = 0 -> floored
    u = 2.0 * 0.625 / 1e-8
    assert surrogate_risk(ScoreSet([0.5], [0.0, 1.0]), params) == pytest.approx(
        u / (1 + u), abs=1e-15
    )


def test_surrogate_risk_zero_when_separated():
    params = SurrogateParams(tau1=1.0, tau2=0.5, prior_pi=0.25)
    assert surrogate_risk(ScoreSet([2.0, 3.0], [0.5, 0.9]), params) == 0.0


def test_surrogate_risk_all_tied_saturates():
    params = SurrogateParams(tau1=1.0, tau2=0.5, prior_pi=0.5)
    got = surrogate_risk(ScoreSet([1.0, 1.0], [1.0, 1.0]), params)
    assert got == pytest.approx(1.0, abs=1e-7)


def test_surrogate_risk_matches_scalar_oracle():
    gen = np.random.default_rng(17)
    params = SurrogateParams(tau1=0.8, tau2=0.3, prior_pi=0.2)
    for _ in range(50):
        pos = gen.uniform(-1, 1, size=int(gen.integers(1, 8)))
        neg = gen.uniform(-1, 1, size=int(gen.integers(1, 12)))
        got = surrogate_risk(ScoreSet(pos, neg), params)
        assert got == pytest.approx(scalar_surrogate_oracle(pos, neg, params), abs=1e-12)


def test_ap_loss_perfect_separation():
    params = SurrogateParams(tau1=1.0, tau2=0.5, prior_pi=0.9)
    assert ap_loss(ScoreSet([2.0, 5.0], [0.5]), params) == 0.0


def test_ap_loss_floor_saturation_example():
    params = SurrogateParams(tau1=1.0, tau2=0.5, prior_pi=0.5)
    got = ap_loss(ScoreSet([0.5], [0.0, 1.0]), params)
    # sum numerator l1(0.5)+l1(-0.5) = 1.25, denominator l2(0) = 0 -> floored
    assert got > 1 - 1e-6


def test_ap_loss_equals_surrogate_risk_at_matched_prior():
    gen = np.random.default_rng(23)
    for _ in range(100):
        pos = gen.normal(size=int(gen.integers(1, 10)))
        neg = gen.normal(size=int(gen.integers(1, 20)))
        prior = pos.size / (pos.size + neg.size)
        params = SurrogateParams(tau1=1.2, tau2=0.4, prior_pi=prior)
        scores = ScoreSet(pos, neg)
        assert ap_loss(scores, params) == pytest.approx(
            surrogate_risk(scores, params), abs=1e-12
        )


def test_ap_loss_approaches_surrogate_risk_as_tau2_shrinks():
    # balanced set, small tau2: the soft TPR approaches the 0-1 count
    gen = np.random.default_rng(29)
    pos = gen.normal(1, 1, size=40)
    neg = gen.normal(0, 1, size=40)
    scores = ScoreSet(pos, neg)
    gaps = []
    for tau2 in (0.5, 0.1, 0.02):
        params = SurrogateParams(tau1=1.0, tau2=tau2, prior_pi=0.5)
        gaps.append(abs(ap_loss(scores, params) - surrogate_risk(scores, params)))
    assert all(g < 1e-12 for g in gaps)  # exact at matched prior, any tau


def test_pr_curve_perfect_ranking():
    curve = pr_curve(ScoreSet([3.0, 4.0], [1.0, 2.0]), 0.5)
    assert np.all(curve.precisions == 1.0)
    assert curve.recalls.tolist() == [0.5, 1.0]


def test_pr_curve_single_positive_last():
    curve = pr_curve(ScoreSet([0.0], [1.0, 2.0]), 0.25)
    assert curve.points.shape == (1, 2)
    recall, precision = curve.points[0]
    assert recall == 1.0
    assert precision == pytest.approx(0.25, abs=1e-15)


def test_pr_curve_area_consistency():
    gen = np.random.default_rng(31)
    for _ in range(300):
        pos = gen.integers(0, 5, size=int(gen.integers(1, 20))).astype(float)
        neg = gen.integers(0, 5, size=int(gen.integers(1, 20))).astype(float)
        prior = gen.uniform(0.05, 0.95)
        scores = ScoreSet(pos, neg)
        curve = pr_curve(scores, prior)
        assert curve.step_area() == pytest.approx(empirical_auprc(scores, prior), abs=1e-12)
        assert np.all(np.diff(curve.recalls) >= 0)
        assert np.all((curve.precisions > 0) & (curve.precisions <= 1))


def test_pr_curve_csv(tmp_path):
    curve = pr_curve(ScoreSet([3.0, 1.0], [2.0]), 2 / 3)
    path = tmp_path / "curve.csv"
    curve.write_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["recall", "precision"]
    assert len(rows) == 3
    back = PRCurve(np.array([[float(r), float(p)] for r, p in rows[1:]]))
    np.testing.assert_array_equal(back.points, curve.points)
