"""Piecewise-linear score resampling: map n sorted batch scores onto a
longer vector of N+ uniformly spaced quantile positions.

The resampler sorts the input descending, treats value i as the knot at
position i/n, adds a linear-extrapolation boundary knot at position 0
(clamped into the declared score range), and evaluates the resulting
piecewise-linear function at positions j/N+ for j = 1..N+. With n = N+
this is a pure pass-through of the sorted input; a constant vector maps
to a constant vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_SCORE_RANGE,
    DomainError,
    EmptyClassError,
    MonotonicityError,
    ScoreRangeError,
)


@dataclass(frozen=True)
class InterpConfig:
    """Target length and declared score range [range_lo, range_hi]."""

    target_len: int
    range_lo: float = DEFAULT_SCORE_RANGE[0]
    range_hi: float = DEFAULT_SCORE_RANGE[1]

    def __post_init__(self):
        if self.target_len < 1:
            raise DomainError("target_len must be >= 1")
        if not self.range_lo < self.range_hi:
            raise DomainError("need range_lo < range_hi")


def interpolate(u, cfg: InterpConfig) -> np.ndarray:
    """Resample scores onto cfg.target_len quantile positions.

    `u` is a length-n vector (or an (R, n) array of R independent rows,
    resampled row-wise). Every input must lie in [range_lo, range_hi];
    the output rows are sorted descending and stay within the range.
    """
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim == 1
    rows = u[None, :] if single else u
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise EmptyClassError("interpolation input is empty")
    if not np.all(np.isfinite(rows)):
        raise DomainError("scores must be finite")
    if np.any(rows < cfg.range_lo) or np.any(rows > cfg.range_hi):
        raise ScoreRangeError(
            f"scores outside declared range [{cfg.range_lo}, {cfg.range_hi}]"
        )
    n = rows.shape[1]
    big = cfg.target_len

    srt = np.sort(rows, axis=1)[:, ::-1]
    if n == 1:
        head = srt[:, :1]
    else:
        head = np.clip(2.0 * srt[:, :1] - srt[:, 1:2], cfg.range_lo, cfg.range_hi)
    knots = np.concatenate([head, srt], axis=1)  # value at position i/n, i = 0..n

    # Position of output j is j/big; s = j*n/big locates it among the knots.
    j = np.arange(1, big + 1, dtype=np.float64)
    s = j * n / big
    k = np.ceil(s).astype(np.int64)
    np.clip(k, 1, n, out=k)
    w = s - (k - 1)
    left, right = knots[:, k - 1], knots[:, k]
    # incremental form keeps ties exact; integer s hits the knot exactly,
    # which makes n == target_len a strict pass-through
    out = left + w * (right - left)
    out = np.where(w >= 1.0, right, out)
    return out[0] if single else out


def interp_sup_error(quantile_fn, n: int, n_grid: int, cfg: InterpConfig | None = None) -> float:
    """Worst-case gap between a quantile function and its linear interpolant.

    Samples `quantile_fn` at the n+1 knots i/n (i = 0..n), giving n
    interpolation intervals of length 1/n over [0, 1], and returns the sup
    of |p - p_hat| over an `n_grid`-point uniform grid. The function must
    be finite at both endpoints (restrict unbounded quantile functions to
    an interior window first). When `cfg` is given the sampled values must
    fall inside its declared range.
    """
    if n < 2:
        raise DomainError("need at least two intervals")
    if n_grid < 2:
        raise DomainError("need a dense evaluation grid")
    xs = np.arange(0, n + 1, dtype=np.float64) / n
    ys = _eval_fn(quantile_fn, xs)
    if not np.all(np.isfinite(ys)):
        raise DomainError("quantile function returned non-finite values")
    if np.any(np.diff(ys) < 0):
        raise MonotonicityError("quantile samples must be non-decreasing")
    if cfg is not None and (np.any(ys < cfg.range_lo) or np.any(ys > cfg.range_hi)):
        raise ScoreRangeError("quantile samples outside declared range")
    grid = np.linspace(xs[0], xs[-1], n_grid)
    p_hat = np.interp(grid, xs, ys)
    p = _eval_fn(quantile_fn, grid)
    return float(np.max(np.abs(p - p_hat)))


def _eval_fn(fn, xs: np.ndarray) -> np.ndarray:
    try:
        ys = np.asarray(fn(xs), dtype=np.float64)
        if ys.shape == xs.shape:
            return ys
    except (TypeError, ValueError):
        pass
    return np.asarray([float(fn(x)) for x in xs])
