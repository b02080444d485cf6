"""Batch-based ranking-risk estimators and their analytic score gradients.

Two estimators are provided:

  * `batch_estimator`: per batch positive, the numerator averages the
    one-side Huber loss against the batch negatives and the denominator
    averages the one-side sigmoid loss against an auxiliary length-N+
    vector `v` standing in for the full positive score set; the ratio is
    reweighted by (1-pi)/pi with the dataset prior pi. Its asymptotic
    bias vanishes for any batch sampling rate.
  * `ap_estimator`: the conventional average-precision batch loss, whose
    denominator pool is the batch's own positives and whose implicit
    prior is the batch sampling rate pi0.

Gradients treat `v` as a constant (no gradient flows into the auxiliary
vector) and zero the denominator path wherever the denominator sits at
the floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmptyClassError, DomainError
from .surrogate import (
    SurrogateParams,
    _ell1_prime_raw,
    _ell1_raw,
    _ell2_prime_raw,
    _ell2_raw,
)

# Cap on elements per pairwise-difference chunk (memory/latency trade-off).
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class AuxVector:
    """Length-N+ EMA of interpolated positive scores, kept sorted descending."""

    values: np.ndarray
    beta: float = 1.0
    step_count: int = 0

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if vals.size == 0:
            raise EmptyClassError("auxiliary vector must be non-empty")
        if not np.all(np.isfinite(vals)):
            raise DomainError("auxiliary vector must be finite")
        if np.any(np.diff(vals) > 0):
            raise ValueError("auxiliary vector must be sorted descending")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError("beta must lie in (0, 1]")
        if self.step_count < 0:
            raise DomainError("step_count must be >= 0")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class EstimatorGradients:
    """Estimator value plus d value / d score for each batch example."""

    value: float
    d_pos: np.ndarray
    d_neg: np.ndarray


def _as_scores(x, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.size == 0:
        raise EmptyClassError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _aux_values(v) -> np.ndarray:
    return _as_scores(getattr(v, "values", v), "auxiliary vector")


def pool_mean_ell1(thresholds: np.ndarray, pool: np.ndarray, tau1: float) -> np.ndarray:
    """Mean one-side Huber loss of (threshold - pool member), per threshold."""
    return _pool_mean(_ell1_raw, thresholds, pool, tau1)


def pool_mean_ell2(thresholds: np.ndarray, pool: np.ndarray, tau2: float) -> np.ndarray:
    """Mean one-side sigmoid loss of (threshold - pool member), per threshold."""
    return _pool_mean(_ell2_raw, thresholds, pool, tau2)


def _pool_mean(kernel, thresholds, pool, tau):
    thresholds = np.asarray(thresholds, dtype=np.float64)
    pool = np.asarray(pool, dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, pool.size))
    out = np.empty(thresholds.size)
    for lo in range(0, thresholds.size, step):
        hi = min(lo + step, thresholds.size)
        out[lo:hi] = kernel(thresholds[lo:hi, None] - pool[None, :], tau).mean(axis=1)
    return out


def sigma_ratio_values(a_means, b_means, prior_pi: float, denom_floor: float) -> np.ndarray:
    """Per-positive sigma((1-pi)/pi * a / max(b, floor)) terms."""
    c = (1.0 - prior_pi) / prior_pi
    u = c * np.asarray(a_means) / np.maximum(np.asarray(b_means), denom_floor)
    return u / (1.0 + u)


def batch_estimator(pos_scores, neg_scores, v, params: SurrogateParams) -> float:
    """Sampling-rate-invariant ranking risk of a batch, given auxiliary v."""
    pos = _as_scores(pos_scores, "pos_scores")
    neg = _as_scores(neg_scores, "neg_scores")
    vv = _aux_values(v)
    a = pool_mean_ell1(pos, neg, params.tau1)
    b = pool_mean_ell2(pos, vv, params.tau2)
    return float(np.mean(sigma_ratio_values(a, b, params.prior_pi, params.denom_floor)))


def batch_estimator_grad(pos_scores, neg_scores, v, params: SurrogateParams) -> EstimatorGradients:
    """Value and exact score gradients of `batch_estimator` (v constant)."""
    pos = _as_scores(pos_scores, "pos_scores")
    neg = _as_scores(neg_scores, "neg_scores")
    vv = _aux_values(v)
    n_pos, n_neg = pos.size, neg.size
    c = params.pos_weight

    d1 = pos[:, None] - neg[None, :]
    a = _ell1_raw(d1, params.tau1).mean(axis=1)
    a1 = _ell1_prime_raw(d1, params.tau1)
    a_prime = a1.mean(axis=1)

    d2 = pos[:, None] - vv[None, :]
    b = _ell2_raw(d2, params.tau2).mean(axis=1)
    b_prime = _ell2_prime_raw(d2, params.tau2).mean(axis=1)

    floored = b <= params.denom_floor
    bf = np.maximum(b, params.denom_floor)
    b_prime = np.where(floored, 0.0, b_prime)

    u = c * a / bf
    sig = u / (1.0 + u)
    sp = 1.0 / np.square(1.0 + u)

    d_pos = sp * c * (a_prime * bf - a * b_prime) / np.square(bf) / n_pos
    d_neg = -(c / (n_pos * n_neg)) * ((sp / bf) @ a1)
    return EstimatorGradients(float(np.mean(sig)), d_pos, d_neg)


def ap_estimator(pos_scores, neg_scores, params: SurrogateParams) -> float:
    """Average-precision batch loss: own-positive denominator, implicit pi0."""
    pos = _as_scores(pos_scores, "pos_scores")
    neg = _as_scores(neg_scores, "neg_scores")
    pi0 = pos.size / (pos.size + neg.size)
    a = pool_mean_ell1(pos, neg, params.tau1)
    b = pool_mean_ell2(pos, pos, params.tau2)
    return float(np.mean(sigma_ratio_values(a, b, pi0, params.denom_floor)))


def ap_estimator_grad(pos_scores, neg_scores, params: SurrogateParams) -> EstimatorGradients:
    """Value and exact score gradients of `ap_estimator`.

    Unlike `batch_estimator_grad`, positive-score gradients also flow
    through every other positive's denominator.
    """
    pos = _as_scores(pos_scores, "pos_scores")
    neg = _as_scores(neg_scores, "neg_scores")
    n_pos, n_neg = pos.size, neg.size
    c = (1.0 - n_pos / (n_pos + n_neg)) / (n_pos / (n_pos + n_neg))

    d1 = pos[:, None] - neg[None, :]
    a = _ell1_raw(d1, params.tau1).mean(axis=1)
    a1 = _ell1_prime_raw(d1, params.tau1)
    a_prime = a1.mean(axis=1)

    d2 = pos[:, None] - pos[None, :]
    b = _ell2_raw(d2, params.tau2).mean(axis=1)
    e2 = _ell2_prime_raw(d2, params.tau2)
    b_prime_first = e2.mean(axis=1)

    floored = b <= params.denom_floor
    bf = np.maximum(b, params.denom_floor)
    b_prime_first = np.where(floored, 0.0, b_prime_first)
    e2 = np.where(floored[:, None], 0.0, e2)

    u = c * a / bf
    sig = u / (1.0 + u)
    sp = 1.0 / np.square(1.0 + u)

    d_pos = sp * c * (a_prime * bf - a * b_prime_first) / np.square(bf) / n_pos
    # Denominator-pool path: raising positive m softens every row's ell2 terms.
    d_pos = d_pos + (c / n_pos**2) * ((sp * a / np.square(bf)) @ e2)
    d_neg = -(c / (n_pos * n_neg)) * ((sp / bf) @ a1)
    return EstimatorGradients(float(np.mean(sig)), d_pos, d_neg)
