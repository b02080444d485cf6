import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auprcopt.core import DomainError, EmptyClassError, ScoreSet
from auprcopt.estimator import (
    AuxVector,
    ap_estimator,
    ap_estimator_grad,
    batch_estimator,
    batch_estimator_grad,
)
from auprcopt.metrics import ap_loss
from auprcopt.surrogate import SurrogateParams

PARAMS = SurrogateParams(tau1=1.0, tau2=0.3, prior_pi=0.2)


def fd_grad(f, x, h=1e-6):
    out = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (f(xp) - f(xm)) / (2 * h)
    return out


def assert_close_grad(analytic, numeric, rel=1e-5, floor=1e-9):
    np.testing.assert_array_less(
        np.abs(analytic - numeric),
        rel * np.maximum(np.abs(numeric), np.abs(analytic)) + floor,
    )


def sample_config(gen, n_pos=8, n_neg=32, n_v=50, spread=1.0):
    sp = gen.uniform(-spread, spread, n_pos)
    sn = gen.uniform(-spread, spread, n_neg)
    vv = np.sort(gen.uniform(-spread, spread, n_v))[::-1]
    return sp, sn, vv


def away_from_kinks(sp, sn, vv, tau1, h=1e-5, own_pool=False):
    d1 = sp[:, None] - sn[None, :]
    d2 = np.abs(sp[:, None] - vv[None, :])
    if own_pool:
        # self-differences sit exactly at the ell2 kink but are constants
        # under perturbation, so they neither move the FD nor the gradient
        np.fill_diagonal(d2, np.inf)
    ok = np.all(np.abs(d1) > h) and np.all(np.abs(d1 - tau1) > h)
    return ok and np.all(d2 > h)


def test_scalar_example():
    v = AuxVector(np.array([1.0, 0.0]))
    params = SurrogateParams(tau1=1.0, tau2=0.5, prior_pi=0.5)
    # A = (l1(0.5) + l1(-0.5))/2 = 0.625, B = tanh(0.5)/2
    b = math.tanh(0.5) / 2
    u = 0.625 / b
    expected = u / (1 + u)
    assert batch_estimator([0.5], [0.0, 1.0], v, params) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.730, abs=5e-4)


def test_separated_batch_is_zero_with_zero_grads():
    v = AuxVector(np.array([3.0, 2.5]))
    sp = np.array([3.0, 2.9])
    sn = np.array([0.5, 0.2, 0.1])
    assert batch_estimator(sp, sn, v, PARAMS) == 0.0
    g = batch_estimator_grad(sp, sn, v, PARAMS)
    assert g.value == 0.0
    np.testing.assert_array_equal(g.d_pos, 0.0)
    np.testing.assert_array_equal(g.d_neg, 0.0)
    ga = ap_estimator_grad(sp, sn, PARAMS)
    assert ga.value == 0.0
    np.testing.assert_array_equal(ga.d_pos, 0.0)
    np.testing.assert_array_equal(ga.d_neg, 0.0)


def test_batch_grad_matches_fd():
    gen = np.random.default_rng(101)
    done = 0
    while done < 30:
        sp, sn, vv = sample_config(gen)
        if not away_from_kinks(sp, sn, vv, PARAMS.tau1):
            continue
        v = AuxVector(vv)
        g = batch_estimator_grad(sp, sn, v, PARAMS)
        assert g.value == pytest.approx(batch_estimator(sp, sn, v, PARAMS), abs=1e-15)
        assert_close_grad(g.d_pos, fd_grad(lambda x: batch_estimator(x, sn, v, PARAMS), sp))
        assert_close_grad(g.d_neg, fd_grad(lambda x: batch_estimator(sp, x, v, PARAMS), sn))
        done += 1


def test_ap_grad_matches_fd():
    gen = np.random.default_rng(202)
    done = 0
    while done < 30:
        sp, sn, _ = sample_config(gen)
        if not away_from_kinks(sp, sn, sp, PARAMS.tau1, own_pool=True):
            continue
        g = ap_estimator_grad(sp, sn, PARAMS)
        assert g.value == pytest.approx(ap_estimator(sp, sn, PARAMS), abs=1e-15)
        assert_close_grad(g.d_pos, fd_grad(lambda x: ap_estimator(x, sn, PARAMS), sp))
        assert_close_grad(g.d_neg, fd_grad(lambda x: ap_estimator(sp, x, PARAMS), sn))
        done += 1


def test_grad_at_tau1_branch_boundary():
    # pairwise gaps exactly at tau1 (C1 there, FD valid); keep every
    # denominator off the floor or the 1/eps curvature breaks central FD
    sp = np.array([0.5, 1.2])
    sn = np.array([0.5 - PARAMS.tau1, 1.2 - PARAMS.tau1, -0.4])
    vv = np.sort(np.array([1.5, 0.9, 0.1]))[::-1]
    v = AuxVector(vv)
    g = batch_estimator_grad(sp, sn, v, PARAMS)
    # central FD picks up an O(h * d2 jump) absolute error exactly at the
    # kink, so near-zero components need an absolute floor of that scale
    assert_close_grad(g.d_pos, fd_grad(lambda x: batch_estimator(x, sn, v, PARAMS), sp), rel=1e-4, floor=1e-5)
    assert_close_grad(g.d_neg, fd_grad(lambda x: batch_estimator(sp, x, v, PARAMS), sn), rel=1e-4, floor=1e-5)


def test_floored_denominator_zeroes_denominator_path():
    # all v far below the positive: B = 0 -> floored; FD remains consistent
    sp = np.array([0.9])
    sn = np.array([0.85, 1.1])
    v = AuxVector(np.array([-1.0, -2.0]))
    g = batch_estimator_grad(sp, sn, v, PARAMS)
    assert_close_grad(g.d_pos, fd_grad(lambda x: batch_estimator(x, sn, v, PARAMS), sp))
    assert_close_grad(g.d_neg, fd_grad(lambda x: batch_estimator(sp, x, v, PARAMS), sn))


def test_neg_grads_nonnegative_sweep():
    gen = np.random.default_rng(303)
    for _ in range(1000):
        sp, sn, vv = sample_config(gen, n_pos=4, n_neg=8, n_v=12)
        g = batch_estimator_grad(sp, sn, AuxVector(vv), PARAMS)
        assert np.all(g.d_neg >= 0)


def test_value_bounded():
    gen = np.random.default_rng(404)
    for _ in range(200):
        sp, sn, vv = sample_config(gen, n_pos=3, n_neg=5, n_v=6, spread=2.0)
        val = batch_estimator(sp, sn, AuxVector(vv), PARAMS)
        assert 0.0 <= val < 1.0
        val = ap_estimator(sp, sn, PARAMS)
        assert 0.0 <= val < 1.0


def test_matches_ap_loss_when_v_is_batch_positives():
    gen = np.random.default_rng(505)
    for _ in range(200):
        sp = gen.normal(size=int(gen.integers(1, 9)))
        sn = gen.normal(size=int(gen.integers(1, 17)))
        pi0 = sp.size / (sp.size + sn.size)
        params = SurrogateParams(tau1=1.0, tau2=0.3, prior_pi=pi0)
        v = AuxVector(np.sort(sp)[::-1])
        lhs = batch_estimator(sp, sn, v, params)
        assert lhs == pytest.approx(ap_estimator(sp, sn, params), abs=1e-12)
        assert lhs == pytest.approx(ap_loss(ScoreSet(sp, sn), params), abs=1e-12)


def test_ap_below_batch_estimator_when_oversampling_positives():
    # oversampled positives inflate batch precision, deflating the ap loss
    gen = np.random.default_rng(606)
    prior = 0.1
    params = SurrogateParams(tau1=1.0, tau2=0.3, prior_pi=prior)
    pop_pos = gen.normal(1, 1, 2000)
    v = AuxVector(np.sort(pop_pos)[::-1])
    ap_vals, batch_vals = [], []
    for _ in range(60):
        sp = pop_pos[gen.choice(2000, 50, replace=False)]
        sn = gen.normal(0, 1, 200)  # pi0 = 0.2 > prior
        ap_vals.append(ap_estimator(sp, sn, params))
        batch_vals.append(batch_estimator(sp, sn, v, params))
    assert np.mean(ap_vals) < np.mean(batch_vals)


@given(shift=st.floats(min_value=-3, max_value=3, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_shift_equivariance(shift):
    gen = np.random.default_rng(707)
    sp, sn, vv = sample_config(gen, n_pos=4, n_neg=6, n_v=8)
    v = AuxVector(vv)
    v2 = AuxVector(vv + shift)
    base = batch_estimator_grad(sp, sn, v, PARAMS)
    moved = batch_estimator_grad(sp + shift, sn + shift, v2, PARAMS)
    assert moved.value == pytest.approx(base.value, abs=1e-12)
    np.testing.assert_allclose(moved.d_pos, base.d_pos, atol=1e-12)
    np.testing.assert_allclose(moved.d_neg, base.d_neg, atol=1e-12)


def test_aux_vector_validation():
    with pytest.raises(ValueError):
        AuxVector(np.array([0.0, 1.0]))  # ascending
    with pytest.raises(DomainError):
        AuxVector(np.array([np.nan]))
    with pytest.raises(DomainError):
        AuxVector(np.array([1.0]), beta=0.0)
    with pytest.raises(EmptyClassError):
        AuxVector(np.array([]))
    v = AuxVector(np.array([2.0, 1.0]), beta=0.5, step_count=3)
    assert v.step_count == 3


def test_empty_inputs_rejected():
    v = AuxVector(np.array([0.0]))
    with pytest.raises(EmptyClassError):
        batch_estimator([], [0.0], v, PARAMS)
    with pytest.raises(EmptyClassError):
        ap_estimator([1.0], [], PARAMS)
