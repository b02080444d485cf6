"""Scalar surrogate losses and the concave ratio wrapper, with analytic
first derivatives for manual backprop.

`ell1` is a one-side Huber-style loss (linear for x<0, quadratic on
[0, tau1), zero beyond), `ell2` a one-side sigmoid loss (zero for x>=0).
Both are decreasing soft versions of the 0-1 step loss that fires on x<=0.
All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError


@dataclass(frozen=True)
class SurrogateParams:
    """Hyperparameters shared by the metric and estimator ratio objectives.

    tau1/tau2 are the surrogate temperatures (score units), prior_pi the
    positive-class prior used in the (1-pi)/pi reweighting, denom_floor the
    floor applied to ratio denominators before dividing (defines 0/0).
    """

    tau1: float = 1.0
    tau2: float = 0.1
    prior_pi: float = 0.5
    denom_floor: float = 1e-8

    def __post_init__(self):
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise DomainError("tau1 and tau2 must be positive")
        if not 0.0 < self.prior_pi < 1.0:
            raise DomainError("prior_pi must lie in (0, 1)")
        if not self.denom_floor > 0:
            raise DomainError("denom_floor must be positive")

    @property
    def pos_weight(self) -> float:
        """The (1 - pi) / pi factor."""
        return (1.0 - self.prior_pi) / self.prior_pi


def _check_finite(x):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("input must be finite")
    return x


def ell1(x, tau1: float):
    """One-side Huber loss: -2x/tau1 (x<0), (1-x/tau1)^2 (0<=x<tau1), 0 (x>=tau1)."""
    if tau1 <= 0:
        raise DomainError("tau1 must be positive")
    x = _check_finite(x)
    return _ell1_raw(x, tau1)


def _ell1_raw(x, tau1):
    t = x / tau1
    quad = np.square(1.0 - np.minimum(t, 1.0))
    return np.where(x < 0, -2.0 * t, np.where(x < tau1, quad, 0.0))


def ell1_prime(x, tau1: float):
    """Derivative of ell1; always <= 0, continuous across both branch points."""
    if tau1 <= 0:
        raise DomainError("tau1 must be positive")
    x = _check_finite(x)
    return _ell1_prime_raw(x, tau1)


def _ell1_prime_raw(x, tau1):
    t = x / tau1
    mid = -2.0 * (1.0 - np.minimum(t, 1.0)) / tau1
    return np.where(x < 0, -2.0 / tau1, np.where(x < tau1, mid, 0.0))


def ell2(x, tau2: float):
    """One-side sigmoid loss: tanh(-x/(2 tau2)) for x<0, 0 for x>=0.

    The tanh form equals (exp(-x/tau2)-1)/(exp(-x/tau2)+1) without
    overflowing for very negative x. Values lie in [0, 1).
    """
    if tau2 <= 0:
        raise DomainError("tau2 must be positive")
    x = _check_finite(x)
    return _ell2_raw(x, tau2)


def _ell2_raw(x, tau2):
    return np.where(x < 0, np.tanh(np.minimum(x, 0.0) / (-2.0 * tau2)), 0.0)


def ell2_prime(x, tau2: float):
    """Derivative of ell2; the kink at 0 takes the right derivative 0."""
    if tau2 <= 0:
        raise DomainError("tau2 must be positive")
    x = _check_finite(x)
    return _ell2_prime_raw(x, tau2)


def _ell2_prime_raw(x, tau2):
    th = np.tanh(np.minimum(x, 0.0) / (2.0 * tau2))
    return np.where(x < 0, -(1.0 - np.square(th)) / (2.0 * tau2), 0.0)


def sigma(u):
    """Concave monotone wrapper u / (1 + u) for u >= 0; range [0, 1)."""
    u = _check_finite(u)
    if np.any(u < 0):
        raise DomainError("sigma expects a nonnegative ratio")
    return u / (1.0 + u)


def sigma_prime(u):
    """Derivative 1 / (1 + u)^2 of sigma."""
    u = _check_finite(u)
    if np.any(u < 0):
        raise DomainError("sigma expects a nonnegative ratio")
    return 1.0 / np.square(1.0 + u)
