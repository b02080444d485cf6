"""Seeded Monte-Carlo experiment lab on synthetic score distributions:
estimator-bias studies, interpolation-error studies, EMA concentration
studies, and a leave-one-out training-stability probe.

Every experiment is bit-reproducible from (spec, seed): repeat r always
draws from stream r of the master seed, so results do not depend on
execution order or thread count. Each ResultTable carries a `meta` dict
echoing the full specification.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DomainError, ExperimentSpecError, Dataset, RngHandle, ScoreSet
from .estimator import pool_mean_ell2, sigma_ratio_values
from .interp import InterpConfig, interpolate
from .surrogate import SurrogateParams, _ell1_raw
from .trainer import ScorerModel, TrainConfig, flatten_weights, init_model, train

DIST_KINDS = ("binormal", "bibeta", "offset_uniform")


# ---------------------------------------------------------------------------
# Regularized incomplete beta and its inverse (for inverse-CDF Beta sampling,
# one uniform per draw). Continued-fraction evaluation, vectorized over x.
# ---------------------------------------------------------------------------

def regularized_incomplete_beta(a: float, b: float, x) -> np.ndarray:
    """I_x(a, b) for scalar shapes a, b > 0, vectorized over x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise DomainError("beta shapes must be positive")
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("x must lie in [0, 1]")
    # I_x converges fastest for x < (a+1)/(a+b+2); use symmetry elsewhere.
    direct = x < (a + 1.0) / (a + b + 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ln_bt = (
            math.lgamma(a + b)
            - math.lgamma(a)
            - math.lgamma(b)
            + a * np.log(x)
            + b * np.log1p(-x)
        )
        cf_a = _beta_continued_fraction(a, b, np.where(direct, x, 0.5))
        cf_b = _beta_continued_fraction(b, a, np.where(direct, 0.5, 1.0 - x))
        val_direct = np.exp(ln_bt) * cf_a / a
        val_mirror = 1.0 - np.exp(ln_bt) * cf_b / b
    out = np.where(direct, val_direct, val_mirror)
    out = np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, out))
    return np.clip(out, 0.0, 1.0)


def _beta_continued_fraction(a, b, x, iters: int = 120):
    # modified Lentz's method
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < tiny, tiny, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, iters + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < 3e-16):
            break
    return h


def incomplete_beta_inverse(a: float, b: float, q) -> np.ndarray:
    """Inverse of I_x(a, b) in x, vectorized over quantiles q in [0, 1]."""
    if a <= 0 or b <= 0:
        raise DomainError("beta shapes must be positive")
    q = np.asarray(q, dtype=np.float64)
    if np.any((q < 0) | (q > 1)):
        raise DomainError("quantiles must lie in [0, 1]")
    # coarse monotone table for the initial guess
    grid = np.linspace(0.0, 1.0, 4097)
    cdf = regularized_incomplete_beta(a, b, grid)
    x = np.interp(q, cdf, grid)
    eps = 1e-14
    ln_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    for _ in range(6):  # Newton polish; quadratic convergence from the table start
        x = np.clip(x, eps, 1.0 - eps)
        f = regularized_incomplete_beta(a, b, x) - q
        with np.errstate(divide="ignore", over="ignore"):
            pdf = np.exp(ln_norm + (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x))
        step = np.where(pdf > 0, f / np.maximum(pdf, 1e-300), 0.0)
        x = np.clip(x - step, 0.0, 1.0)
    x = np.where(q <= 0.0, 0.0, np.where(q >= 1.0, 1.0, x))
    return x


# ---------------------------------------------------------------------------
# Synthetic score distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreDistribution:
    """Positive/negative score law: binormal, bibeta, or offset_uniform.

    pos_params/neg_params are (mean, std) for binormal, (alpha, beta)
    shapes for bibeta, and (lo, hi) for offset_uniform.
    """

    kind: str
    pos_params: tuple
    neg_params: tuple

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise ExperimentSpecError(f"kind must be one of {DIST_KINDS}")
        for p in (self.pos_params, self.neg_params):
            if len(p) != 2:
                raise ExperimentSpecError("params must be a pair")
            if self.kind == "binormal" and p[1] <= 0:
                raise ExperimentSpecError("normal std must be positive")
            if self.kind == "bibeta" and (p[0] <= 0 or p[1] <= 0):
                raise ExperimentSpecError("beta shapes must be positive")
            if self.kind == "offset_uniform" and not p[0] < p[1]:
                raise ExperimentSpecError("uniform needs lo < hi")

    @staticmethod
    def default(kind: str) -> "ScoreDistribution":
        if kind == "binormal":
            return ScoreDistribution("binormal", (1.0, 1.0), (0.0, 1.0))
        if kind == "bibeta":
            return ScoreDistribution("bibeta", (5.0, 2.0), (2.0, 5.0))
        if kind == "offset_uniform":
            return ScoreDistribution("offset_uniform", (0.5, 1.5), (0.0, 1.0))
        raise ExperimentSpecError(f"kind must be one of {DIST_KINDS}")

    def _sample(self, params, size, gen):
        if self.kind == "binormal":
            return gen.normal(params[0], params[1], size=size)
        if self.kind == "offset_uniform":
            return gen.uniform(params[0], params[1], size=size)
        return incomplete_beta_inverse(params[0], params[1], gen.random(size))

    def sample_pos(self, size, gen) -> np.ndarray:
        return self._sample(self.pos_params, size, gen)

    def sample_neg(self, size, gen) -> np.ndarray:
        return self._sample(self.neg_params, size, gen)

    def score_range(self) -> tuple:
        """A range certain to contain samples, for interpolation configs."""
        if self.kind == "binormal":
            lo = min(self.pos_params[0], self.neg_params[0])
            hi = max(self.pos_params[0], self.neg_params[0])
            spread = 12.0 * max(self.pos_params[1], self.neg_params[1])
            return (lo - spread, hi + spread)
        if self.kind == "bibeta":
            return (0.0, 1.0)
        return (
            min(self.pos_params[0], self.neg_params[0]),
            max(self.pos_params[1], self.neg_params[1]),
        )

    def spec_dict(self) -> dict:
        return {
            "kind": self.kind,
            "pos_params": list(self.pos_params),
            "neg_params": list(self.neg_params),
        }


def draw_population(dist: ScoreDistribution, size: int, prior_pi: float, rng) -> ScoreSet:
    """Draw round(pi * size) positive and the remaining negative scores."""
    if size < 2:
        raise ExperimentSpecError("population size must be >= 2")
    if not 0.0 < prior_pi < 1.0:
        raise ExperimentSpecError("prior_pi must lie in (0, 1)")
    n_pos = round(prior_pi * size)
    n_neg = size - n_pos
    if n_pos < 1 or n_neg < 1:
        raise ExperimentSpecError(f"degenerate split: {n_pos} positives, {n_neg} negatives")
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    return ScoreSet(dist.sample_pos(n_pos, gen), dist.sample_neg(n_neg, gen))


# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------

@dataclass
class ResultTable:
    """Rows of (x, series, mean, std) grouped by series, plus a spec echo."""

    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, x: float, series: str, mean: float, std: float):
        if not std >= 0:  # also rejects nan
            raise ValueError("std must be >= 0")
        self.rows.append((float(x), str(series), float(mean), float(std)))

    def series(self, name: str):
        """(xs, means, stds) arrays of one series, in insertion order."""
        picked = [(x, m, s) for x, ser, m, s in self.rows if ser == name]
        if not picked:
            raise KeyError(f"no series named {name!r}")
        xs, means, stds = zip(*picked)
        return np.asarray(xs), np.asarray(means), np.asarray(stds)

    def series_names(self):
        seen = []
        for _, ser, _, _ in self.rows:
            if ser not in seen:
                seen.append(ser)
        return seen

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "series", "mean", "std"])
            for x, series, mean, std in self.rows:
                writer.writerow([repr(x), series, repr(mean), repr(std)])


# ---------------------------------------------------------------------------
# Estimator-bias experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasExperimentSpec:
    """Population, sampling rate, batch-size sweep, and repeat budget.

    The surrogate's prior_pi is replaced by `prior_pi` at run time so the
    proposed estimator always reweights with the population prior. With
    `couple_v` the auxiliary vector co-evolves by EMA across repeats
    instead of staying at its population value (repeats then form a chain
    and are not parallelizable).
    """

    distribution: ScoreDistribution
    population_size: int = 100_000
    prior_pi: float = 0.1
    sample_rate_pi0: float = 0.2
    batch_sizes: tuple = (64, 128, 256, 512, 1024)
    repeats: int = 500
    seed: int = 0
    surrogate: SurrogateParams = SurrogateParams()
    couple_v: bool = False
    ema_beta: float = 0.001

    def __post_init__(self):
        if self.repeats < 2:
            raise ExperimentSpecError("need at least 2 repeats")
        if not 0.0 < self.sample_rate_pi0 < 1.0:
            raise ExperimentSpecError("sample_rate_pi0 must lie in (0, 1)")
        for n in self.batch_sizes:
            n_pos, n_neg = self.batch_split(n)
            if n_pos < 1 or n_neg < 1:
                raise ExperimentSpecError(f"batch size {n} infeasible at pi0={self.sample_rate_pi0}")

    def batch_split(self, n: int):
        n_pos = round(self.sample_rate_pi0 * n)
        return n_pos, n - n_pos

    def spec_dict(self) -> dict:
        return {
            "distribution": self.distribution.spec_dict(),
            "population_size": self.population_size,
            "prior_pi": self.prior_pi,
            "sample_rate_pi0": self.sample_rate_pi0,
            "batch_sizes": list(self.batch_sizes),
            "repeats": self.repeats,
            "seed": self.seed,
            "tau1": self.surrogate.tau1,
            "tau2": self.surrogate.tau2,
            "denom_floor": self.surrogate.denom_floor,
            "couple_v": self.couple_v,
            "ema_beta": self.ema_beta,
        }


def ell1_means_sorted(thresholds, pool_sorted, tau1: float) -> np.ndarray:
    """Mean one-side Huber loss of (c - pool) for each threshold c, computed
    from prefix sums of the ascending-sorted pool.

    Algebraically identical to the pairwise mean; used where the pool is
    large and fixed (population references).
    """
    p = np.asarray(pool_sorted, dtype=np.float64)
    c = np.asarray(thresholds, dtype=np.float64)
    n = p.size
    s1 = np.concatenate([[0.0], np.cumsum(p)])
    s2 = np.concatenate([[0.0], np.cumsum(np.square(p))])
    hi = np.searchsorted(p, c, side="right")  # pool members <= c
    lo = np.searchsorted(p, c - tau1, side="right")
    cnt_hi = n - hi
    linear = (2.0 / tau1) * ((s1[n] - s1[hi]) - c * cnt_hi)
    cnt_mid = hi - lo
    sum_p = s1[hi] - s1[lo]
    sum_p2 = s2[hi] - s2[lo]
    shift = tau1 - c
    quad = (sum_p2 + 2.0 * shift * sum_p + np.square(shift) * cnt_mid) / tau1**2
    return (linear + quad) / n


def population_reference(pop: ScoreSet, params: SurrogateParams):
    """Full-population surrogate risk plus the cached per-positive pieces.

    Returns (reference value, a_pop, b_pop) where a_pop/b_pop are the
    numerator/denominator means for every population positive, with the
    denominator pool being the descending-sorted positive scores (the
    interpolation of the full positive set is exactly that sort).
    """
    v_pop = np.sort(pop.pos_scores)[::-1]
    neg_sorted = np.sort(pop.neg_scores)
    a_pop = ell1_means_sorted(pop.pos_scores, neg_sorted, params.tau1)
    b_pop = pool_mean_ell2(pop.pos_scores, v_pop, params.tau2)
    terms = sigma_ratio_values(a_pop, b_pop, params.prior_pi, params.denom_floor)
    return float(np.mean(terms)), a_pop, b_pop


def run_bias_experiment(spec: BiasExperimentSpec, threads: int = 1) -> ResultTable:
    """Mean/std of (estimator - full-population risk) per batch size, for
    the proposed estimator (auxiliary vector fixed at its population value)
    and the average-precision estimator, on the same batch draws."""
    params = replace(spec.surrogate, prior_pi=spec.prior_pi)
    pop = draw_population(
        spec.distribution, spec.population_size, spec.prior_pi, RngHandle(spec.seed, 0)
    )
    reference, _, b_pop = population_reference(pop, params)
    n_pop_pos, n_pop_neg = pop.n_pos, pop.n_neg

    table = ResultTable(meta={"experiment": "bias", "reference": reference, **spec.spec_dict()})
    for i, n in enumerate(spec.batch_sizes):
        n_pos, n_neg = spec.batch_split(n)
        if n_pos > n_pop_pos or n_neg > n_pop_neg:
            raise ExperimentSpecError(f"batch size {n} exceeds the population")
        pi0 = n_pos / (n_pos + n_neg)
        err_prop = np.empty(spec.repeats)
        err_ap = np.empty(spec.repeats)
        v_state = np.sort(pop.pos_scores)[::-1].copy()

        def one_repeat(r, n_pos=n_pos, n_neg=n_neg, pi0=pi0, i=i, v_state=v_state):
            gen = RngHandle(spec.seed, 1 + i * spec.repeats + r).generator()
            idx_p = gen.choice(n_pop_pos, size=n_pos, replace=False)
            idx_n = gen.choice(n_pop_neg, size=n_neg, replace=False)
            sp = pop.pos_scores[idx_p]
            sn = pop.neg_scores[idx_n]
            a = _ell1_raw(sp[:, None] - sn[None, :], params.tau1).mean(axis=1)
            if spec.couple_v:
                phi = interpolate(np.sort(sp)[::-1], InterpConfig(n_pop_pos, *spec.distribution.score_range()))
                v_state *= 1.0 - spec.ema_beta
                v_state += spec.ema_beta * phi
                b = pool_mean_ell2(sp, v_state, params.tau2)
            else:
                b = b_pop[idx_p]
            prop = np.mean(sigma_ratio_values(a, b, params.prior_pi, params.denom_floor))
            b_own = pool_mean_ell2(sp, sp, params.tau2)
            ap = np.mean(sigma_ratio_values(a, b_own, pi0, params.denom_floor))
            return prop - reference, ap - reference

        if threads > 1 and not spec.couple_v:
            with ThreadPoolExecutor(max_workers=threads) as pool_exec:
                results = list(pool_exec.map(one_repeat, range(spec.repeats)))
        else:
            results = [one_repeat(r) for r in range(spec.repeats)]
        for r, (ep, ea) in enumerate(results):
            err_prop[r], err_ap[r] = ep, ea

        table.add(n, "proposed", float(np.mean(err_prop)), float(np.std(err_prop, ddof=1)))
        table.add(n, "ap", float(np.mean(err_ap)), float(np.std(err_ap, ddof=1)))
    return table


# ---------------------------------------------------------------------------
# Interpolation-error experiment
# ---------------------------------------------------------------------------

def run_interp_experiment(
    dist: ScoreDistribution,
    n_values,
    target_len: int,
    repeats: int,
    seed: int,
    threads: int = 1,
) -> ResultTable:
    """Sup-norm gap between the sorted population positive scores and the
    interpolation of an n-subsample, per n, over `repeats` subsamples."""
    if repeats < 2:
        raise ExperimentSpecError("need at least 2 repeats")
    n_values = [int(n) for n in n_values]
    for n in n_values:
        if not 1 <= n <= target_len:
            raise ExperimentSpecError(f"subsample size {n} not in [1, {target_len}]")
    pop_pos = dist.sample_pos(target_len, RngHandle(seed, 0).generator())
    ref = np.sort(pop_pos)[::-1]
    cfg = InterpConfig(target_len, *dist.score_range())

    table = ResultTable(
        meta={
            "experiment": "interp",
            "distribution": dist.spec_dict(),
            "n_values": n_values,
            "target_len": target_len,
            "repeats": repeats,
            "seed": seed,
        }
    )

    for i, n in enumerate(n_values):
        def one_repeat(r, n=n, i=i):
            gen = RngHandle(seed, 1 + i * repeats + r).generator()
            sub = pop_pos[gen.choice(target_len, size=n, replace=False)]
            return float(np.max(np.abs(interpolate(sub, cfg) - ref)))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool_exec:
                sup = np.asarray(list(pool_exec.map(one_repeat, range(repeats))))
        else:
            sup = np.asarray([one_repeat(r) for r in range(repeats)])
        table.add(n, "interp_sup_error", float(np.mean(sup)), float(np.std(sup, ddof=1)))
    return table


# ---------------------------------------------------------------------------
# EMA concentration experiment
# ---------------------------------------------------------------------------

def run_ema_experiment(
    source,
    betas,
    T: int,
    repeats: int,
    seed: int,
    n_pos: int = 32,
    target_len: int = 200,
    ref_draws: int = 20_000,
) -> ResultTable:
    """Bias decay and variance concentration of the auxiliary-vector EMA
    under a fixed scorer.

    `source` is either a ScoreDistribution (fresh positive scores per step)
    or a fixed 1-D pool of positive scores sampled without replacement
    (the fixed-scorer-on-a-dataset case). Per beta, reports the per-entry
    mean absolute bias of mean(v_t) against the reference interpolant
    trajectory ("bias[beta=..]", x = step) and the per-entry variance
    ratio Var[v_T] / Var[phi] ("var_ratio_mean"/"var_ratio_max", x = beta).

    v starts at the zero vector so the bias decay is visible.
    """
    if repeats < 2 or T < 1:
        raise ExperimentSpecError("need repeats >= 2 and T >= 1")
    betas = [float(b) for b in betas]
    for b in betas:
        if not 0.0 < b <= 1.0:
            raise ExperimentSpecError("beta must lie in (0, 1]")

    if isinstance(source, ScoreDistribution):
        lo, hi = source.score_range()

        def draw(shape, gen):
            return source.sample_pos(shape[0] * shape[1], gen).reshape(shape)

        source_spec = source.spec_dict()
    else:
        pool = np.asarray(source, dtype=np.float64)
        if pool.ndim != 1 or pool.size < n_pos:
            raise ExperimentSpecError("score pool must be 1-D with >= n_pos entries")
        lo, hi = float(pool.min()) - 1.0, float(pool.max()) + 1.0

        def draw(shape, gen):
            rows = [pool[gen.choice(pool.size, size=shape[1], replace=False)] for _ in range(shape[0])]
            return np.stack(rows)

        source_spec = {"kind": "fixed_pool", "size": int(pool.size)}

    cfg = InterpConfig(target_len, lo, hi)
    ref_sample = interpolate(draw((ref_draws, n_pos), RngHandle(seed, 0).generator()), cfg)
    ref_mean = ref_sample.mean(axis=0)
    ref_var = ref_sample.var(axis=0, ddof=1)

    table = ResultTable(
        meta={
            "experiment": "ema",
            "source": source_spec,
            "betas": betas,
            "T": T,
            "repeats": repeats,
            "seed": seed,
            "n_pos": n_pos,
            "target_len": target_len,
            "ref_draws": ref_draws,
        }
    )

    for b_idx, beta in enumerate(betas):
        v = np.zeros((repeats, target_len))
        series = f"bias[beta={beta:g}]"
        bias0 = np.abs(v.mean(axis=0) - ref_mean)
        table.add(0, series, float(bias0.mean()), float(bias0.std(ddof=1)))
        for t in range(1, T + 1):
            gen = RngHandle(seed, 1 + b_idx * T + (t - 1)).generator()
            phi = interpolate(draw((repeats, n_pos), gen), cfg)
            v = (1.0 - beta) * v + beta * phi
            bias_t = np.abs(v.mean(axis=0) - ref_mean)
            table.add(t, series, float(bias_t.mean()), float(bias_t.std(ddof=1)))
        ratio = v.var(axis=0, ddof=1) / ref_var
        table.add(beta, "var_ratio_mean", float(ratio.mean()), float(ratio.std(ddof=1)))
        table.add(beta, "var_ratio_max", float(ratio.max()), 0.0)
    return table


# ---------------------------------------------------------------------------
# Gaussian-blob generator and leave-one-out stability probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlobSpec:
    """Two-class Gaussian blob generator in the plane."""

    pos_mean: tuple = (1.0, 1.0)
    neg_mean: tuple = (-1.0, -1.0)
    stddev: float = 1.0
    prior_pi: float = 0.1

    def __post_init__(self):
        if self.stddev <= 0:
            raise ExperimentSpecError("stddev must be positive")
        if not 0.0 < self.prior_pi < 1.0:
            raise ExperimentSpecError("prior_pi must lie in (0, 1)")

    def spec_dict(self) -> dict:
        return {
            "pos_mean": list(self.pos_mean),
            "neg_mean": list(self.neg_mean),
            "stddev": self.stddev,
            "prior_pi": self.prior_pi,
        }


def make_blobs(spec: BlobSpec, size: int, rng) -> Dataset:
    """Draw round(pi * size) positive and the remaining negative vectors."""
    n_pos = round(spec.prior_pi * size)
    n_neg = size - n_pos
    if n_pos < 1 or n_neg < 1:
        raise ExperimentSpecError(f"degenerate split: {n_pos} positives, {n_neg} negatives")
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    dim = len(spec.pos_mean)
    pos = gen.normal(spec.pos_mean, spec.stddev, size=(n_pos, dim))
    neg = gen.normal(spec.neg_mean, spec.stddev, size=(n_neg, dim))
    return Dataset(pos, neg)


def run_stability_probe(
    blob_spec: BlobSpec,
    sizes,
    cfg: TrainConfig,
    num_perturbations: int,
    seed: int,
    model: ScorerModel | None = None,
) -> ResultTable:
    """Leave-one-out training stability across dataset sizes.

    For each size N: train on S, then for each perturbation resample one
    example's features from the generator (same class) and retrain with
    identical seeds; report the mean parameter distance per class and
    overall. Perturbations alternate between the classes.
    """
    sizes = [int(n) for n in sizes]
    if num_perturbations < 2:
        raise ExperimentSpecError("need at least 2 perturbations")
    table = ResultTable(
        meta={
            "experiment": "stability",
            "blobs": blob_spec.spec_dict(),
            "sizes": sizes,
            "num_perturbations": num_perturbations,
            "seed": seed,
        }
    )
    dim = len(blob_spec.pos_mean)
    if model is None:
        model = init_model("linear", dim, rng=RngHandle(seed, 10))

    for j, size in enumerate(sizes):
        ds = make_blobs(blob_spec, size, RngHandle(seed, 100 + j))
        train_rng = RngHandle(seed, 200 + j)
        base, _, _ = train(ds, model, cfg, rng=train_rng)
        base_flat = flatten_weights(base.weights)
        pert_gen = RngHandle(seed, 300 + j).generator()

        dists = {1: [], -1: []}
        for k in range(num_perturbations):
            label = 1 if k % 2 == 0 else -1
            if label == 1:
                idx = int(pert_gen.integers(ds.n_pos))
                fresh = pert_gen.normal(blob_spec.pos_mean, blob_spec.stddev, size=dim)
                pos = ds.positives.copy()
                pos[idx] = fresh
                ds_k = Dataset(pos, ds.negatives)
            else:
                idx = int(pert_gen.integers(ds.n_neg))
                fresh = pert_gen.normal(blob_spec.neg_mean, blob_spec.stddev, size=dim)
                neg = ds.negatives.copy()
                neg[idx] = fresh
                ds_k = Dataset(ds.positives, neg)
            trained_k, _, _ = train(ds_k, model, cfg, rng=train_rng)
            dists[label].append(float(np.linalg.norm(base_flat - flatten_weights(trained_k.weights))))

        def spread(d):
            return float(np.std(d, ddof=1)) if len(d) > 1 else 0.0

        all_d = dists[1] + dists[-1]
        table.add(size, "pos", float(np.mean(dists[1])), spread(dists[1]))
        table.add(size, "neg", float(np.mean(dists[-1])), spread(dists[-1]))
        table.add(size, "all", float(np.mean(all_d)), spread(all_d))
    return table
