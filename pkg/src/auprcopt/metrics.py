"""Exact full-set ranking metrics: empirical AUPRC, its differentiable
surrogate risk, the average-precision loss, and PR-curve extraction.

Tie convention: a sample whose score equals the threshold counts as
retrieved (the underlying step loss fires on x <= 0). Rank-style oracles
must use the same convention to reproduce these values exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import DomainError, ScoreSet
from .estimator import pool_mean_ell1, pool_mean_ell2, sigma_ratio_values
from .surrogate import SurrogateParams


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) points, one per positive, by decreasing threshold."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (k, 2) array")
        object.__setattr__(self, "points", pts)

    @property
    def recalls(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def precisions(self) -> np.ndarray:
        return self.points[:, 1]

    def step_area(self) -> float:
        """Step integral sum((r_k - r_{k-1}) * p_k) with r_0 = 0."""
        deltas = np.diff(self.points[:, 0], prepend=0.0)
        return float(np.sum(deltas * self.points[:, 1]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["recall", "precision"])
            for r, p in self.points:
                writer.writerow([repr(float(r)), repr(float(p))])


def _check_prior(prior_pi: float) -> None:
    if not 0.0 < prior_pi < 1.0:
        raise DomainError("prior_pi must lie in (0, 1)")


def _rates_at_positive_thresholds(scores: ScoreSet):
    """Empirical TPR/FPR at each positive's score, positives sorted descending."""
    pos = np.sort(scores.pos_scores)[::-1]
    pos_asc = pos[::-1]
    neg_asc = np.sort(scores.neg_scores)
    # count >= c via left-bisection on the ascending arrays; ties retrieved
    tp = scores.n_pos - np.searchsorted(pos_asc, pos, side="left")
    fp = scores.n_neg - np.searchsorted(neg_asc, pos, side="left")
    return pos, tp / scores.n_pos, fp / scores.n_neg


def empirical_auprc(scores: ScoreSet, prior_pi: float) -> float:
    """Mean over positives of pi*TPR / (pi*TPR + (1-pi)*FPR) at their scores."""
    _check_prior(prior_pi)
    _, tpr, fpr = _rates_at_positive_thresholds(scores)
    precision = prior_pi * tpr / (prior_pi * tpr + (1.0 - prior_pi) * fpr)
    return float(np.mean(precision))


def pr_curve(scores: ScoreSet, prior_pi: float) -> PRCurve:
    """One (recall, precision) point per positive, by decreasing threshold.

    The step area under the returned curve equals `empirical_auprc`.
    """
    _check_prior(prior_pi)
    _, tpr, fpr = _rates_at_positive_thresholds(scores)
    precision = prior_pi * tpr / (prior_pi * tpr + (1.0 - prior_pi) * fpr)
    return PRCurve(np.column_stack([tpr, precision]))


def surrogate_risk(scores: ScoreSet, params: SurrogateParams) -> float:
    """Differentiable full-set risk: soft FPR over soft TPR per positive.

    The soft TPR averages over all positives including the threshold's own
    score (whose term is zero), so the top-ranked positive's denominator is
    defined by the floor.
    """
    a = pool_mean_ell1(scores.pos_scores, scores.neg_scores, params.tau1)
    b = pool_mean_ell2(scores.pos_scores, scores.pos_scores, params.tau2)
    terms = sigma_ratio_values(a, b, params.prior_pi, params.denom_floor)
    return float(np.mean(terms))


def ap_loss(scores: ScoreSet, params: SurrogateParams) -> float:
    """Average-precision loss of the set; the prior is implicitly the set's
    own positive fraction (params.prior_pi is ignored)."""
    a = pool_mean_ell1(scores.pos_scores, scores.neg_scores, params.tau1)
    b = pool_mean_ell2(scores.pos_scores, scores.pos_scores, params.tau2)
    terms = sigma_ratio_values(a, b, scores.prior_pi, params.denom_floor)
    return float(np.mean(terms))
