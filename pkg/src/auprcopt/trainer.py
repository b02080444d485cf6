"""SGD training loop for the batch ranking risk: bounded-output scorers
with manual forward/backward, the auxiliary-vector EMA update, the
semi-variance regularizer, and learning-rate schedules.

Scores are squashed through B*tanh(. / B) so they stay inside the
interpolation range [-B, B]; the squash derivative is part of the manual
backward pass. The auxiliary vector is treated as a constant when
differentiating the batch estimator (its fresh-batch echo is negligible
at the default beta).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    Dataset,
    DivergenceError,
    DomainError,
    EmptyClassError,
    RngHandle,
    ScoreSet,
    ShapeError,
    _as_generator,
    sample_batch,
)
from .estimator import AuxVector, batch_estimator_grad
from .interp import InterpConfig, interpolate
from .metrics import empirical_auprc
from .surrogate import SurrogateParams

MODEL_KINDS = ("linear", "mlp1")


@dataclass(frozen=True)
class ScorerModel:
    """Linear or one-hidden-layer scorer with bounded output.

    weights maps parameter names to arrays: {"w"} for linear,
    {"W1", "b1", "w2"} for mlp1. Output = score_bound * tanh(raw / score_bound).
    """

    kind: str
    weights: dict
    input_dim: int
    hidden_dim: int = 0
    score_bound: float = 1.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}")
        if self.score_bound <= 0:
            raise DomainError("score_bound must be positive")
        for name, arr in self.weights.items():
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"weight {name} must be finite")

    def copy(self) -> "ScorerModel":
        return replace(self, weights={k: v.copy() for k, v in self.weights.items()})


def init_model(
    kind: str,
    input_dim: int,
    hidden_dim: int = 0,
    score_bound: float = 1.0,
    rng=None,
) -> ScorerModel:
    """Random small-weight initialization."""
    gen = _as_generator(rng) if rng is not None else RngHandle(0).generator()
    if kind == "linear":
        weights = {"w": gen.normal(0.0, 1.0 / math.sqrt(input_dim), size=input_dim)}
    elif kind == "mlp1":
        if hidden_dim < 1:
            raise DomainError("mlp1 needs hidden_dim >= 1")
        weights = {
            "W1": gen.normal(0.0, 1.0 / math.sqrt(input_dim), size=(hidden_dim, input_dim)),
            "b1": np.zeros(hidden_dim),
            "w2": gen.normal(0.0, 1.0 / math.sqrt(hidden_dim), size=hidden_dim),
        }
    else:
        raise ValueError(f"kind must be one of {MODEL_KINDS}")
    return ScorerModel(kind, weights, input_dim, hidden_dim, score_bound)


def forward(model: ScorerModel, x: np.ndarray) -> np.ndarray:
    """Scores of one vector or an (N, dim) matrix of feature vectors."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xs = x[None, :] if single else x
    if xs.shape[1] != model.input_dim:
        raise ShapeError(f"expected dim {model.input_dim}, got {xs.shape[1]}")
    bound = model.score_bound
    if model.kind == "linear":
        raw = xs @ model.weights["w"]
    else:
        z = np.tanh(xs @ model.weights["W1"].T + model.weights["b1"])
        raw = z @ model.weights["w2"]
    scores = bound * np.tanh(raw / bound)
    return scores[0] if single else scores


def backward_scores(model: ScorerModel, x: np.ndarray, d_scores: np.ndarray) -> dict:
    """Weight gradient sum_i d_scores[i] * d score_i / d weights."""
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d_scores = np.atleast_1d(np.asarray(d_scores, dtype=np.float64))
    if xs.shape[0] != d_scores.size:
        raise ShapeError("d_scores length must match the number of rows")
    if xs.shape[1] != model.input_dim:
        raise ShapeError(f"expected dim {model.input_dim}, got {xs.shape[1]}")
    bound = model.score_bound
    if model.kind == "linear":
        raw = xs @ model.weights["w"]
        d_raw = d_scores * (1.0 - np.square(np.tanh(raw / bound)))
        return {"w": xs.T @ d_raw}
    a1 = xs @ model.weights["W1"].T + model.weights["b1"]
    z = np.tanh(a1)
    raw = z @ model.weights["w2"]
    d_raw = d_scores * (1.0 - np.square(np.tanh(raw / bound)))
    d_z = d_raw[:, None] * model.weights["w2"][None, :]
    d_a1 = d_z * (1.0 - np.square(z))
    return {"W1": d_a1.T @ xs, "b1": d_a1.sum(axis=0), "w2": z.T @ d_raw}


def flatten_weights(weights: dict) -> np.ndarray:
    return np.concatenate([np.ravel(weights[k]) for k in sorted(weights)])


def unflatten_weights(flat: np.ndarray, template: dict) -> dict:
    out, pos = {}, 0
    for k in sorted(template):
        size = template[k].size
        out[k] = flat[pos : pos + size].reshape(template[k].shape).copy()
        pos += size
    return out


def save_model(model: ScorerModel, path) -> None:
    payload = {
        "kind": model.kind,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "score_bound": model.score_bound,
        "weights": {k: v.tolist() for k, v in model.weights.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ScorerModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        weights = {k: np.asarray(v, dtype=np.float64) for k, v in payload["weights"].items()}
        return ScorerModel(
            payload["kind"],
            weights,
            int(payload["input_dim"]),
            int(payload.get("hidden_dim", 0)),
            float(payload.get("score_bound", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"corrupt model checkpoint {path}: {exc}") from exc


@dataclass(frozen=True)
class LrSchedule:
    """constant(eta) | inverse(C): C/t | pl(mu): (2t+1)/(mu (t+1)^2)."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("constant", "inverse", "pl"):
            raise ValueError("kind must be constant, inverse, or pl")
        if self.param <= 0:
            raise DomainError("schedule parameter must be positive")


def lr_at(schedule: LrSchedule, t: int) -> float:
    """Learning rate at 1-based iteration t."""
    if t < 1:
        raise DomainError("iterations are 1-based")
    if schedule.kind == "constant":
        return schedule.param
    if schedule.kind == "inverse":
        return schedule.param / t
    return (2.0 * t + 1.0) / (schedule.param * (t + 1.0) ** 2)


def ema_update(v: AuxVector, interpolated: np.ndarray, beta_t: float) -> AuxVector:
    """Elementwise convex combination (1-beta_t) v + beta_t interpolated."""
    interpolated = np.asarray(interpolated, dtype=np.float64)
    if interpolated.shape != v.values.shape:
        raise ShapeError(
            f"length mismatch: v has {v.values.size}, update has {interpolated.size}"
        )
    if not 0.0 < beta_t <= 1.0:
        raise DomainError("beta_t must lie in (0, 1]")
    new_values = (1.0 - beta_t) * v.values + beta_t * interpolated
    return AuxVector(new_values, beta=v.beta, step_count=v.step_count + 1)


def semi_variance(pos_scores, neg_scores, lambda1: float, lambda2: float):
    """One-sided variance penalty and its exact score gradients.

    Penalizes positives below their batch mean and negatives above theirs;
    the gradient includes the dependence of each batch mean on the scores.
    Returns (value, d_pos, d_neg).
    """
    pos = np.atleast_1d(np.asarray(pos_scores, dtype=np.float64))
    neg = np.atleast_1d(np.asarray(neg_scores, dtype=np.float64))
    if pos.size == 0 or neg.size == 0:
        raise EmptyClassError("semi_variance needs both classes non-empty")
    if lambda1 < 0 or lambda2 < 0:
        raise DomainError("lambda1 and lambda2 must be >= 0")

    def one_side(s, lam, low_side):
        n = s.size
        mu = s.mean()
        dev = s - mu
        active = dev < 0 if low_side else dev > 0
        value = lam / n * np.sum(np.square(dev[active]))
        grad = (2.0 * lam / n) * (np.where(active, dev, 0.0) - np.sum(dev[active]) / n)
        return value, grad

    v1, g1 = one_side(pos, lambda1, low_side=True)
    v2, g2 = one_side(neg, lambda2, low_side=False)
    return float(v1 + v2), g1, g2


@dataclass(frozen=True)
class TrainConfig:
    """Batch shape, EMA rate, schedule, regularization, and iteration budget."""

    n_pos: int = 8
    n_neg: int = 32
    beta: float = 0.001
    lr_schedule: LrSchedule = LrSchedule("constant", 0.1)
    weight_decay: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    max_iters: int = 1000
    seed: int = 0
    surrogate: SurrogateParams = SurrogateParams()
    use_dataset_prior: bool = True  # replace surrogate.prior_pi with the data prior
    eval_every: int = 100

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError("beta must lie in (0, 1]")
        if self.weight_decay < 0:
            raise DomainError("weight_decay must be >= 0")
        if self.n_pos < 1 or self.n_neg < 1:
            raise DomainError("batch sizes must be >= 1")


@dataclass
class TrainTrace:
    """Per-iteration records; val_auprc is NaN on non-evaluation iterations."""

    iters: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    reg: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    val_auprc: list = field(default_factory=list)

    def append(self, t, loss, reg, grad_norm, lr, val=math.nan):
        self.iters.append(t)
        self.loss.append(loss)
        self.reg.append(reg)
        self.grad_norm.append(grad_norm)
        self.lr.append(lr)
        self.val_auprc.append(val)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iter", "loss", "reg", "grad_norm", "lr", "val_auprc"])
            for row in zip(self.iters, self.loss, self.reg, self.grad_norm, self.lr, self.val_auprc):
                out = [row[0]] + [repr(float(v)) for v in row[1:5]]
                out.append("" if math.isnan(row[5]) else repr(float(row[5])))
                writer.writerow(out)


def evaluate_auprc(model: ScorerModel, dataset: Dataset) -> float:
    scores = ScoreSet(forward(model, dataset.positives), forward(model, dataset.negatives))
    return empirical_auprc(scores, dataset.prior_pi)


def train(dataset: Dataset, model: ScorerModel, cfg: TrainConfig, rng=None, val_dataset=None):
    """Run the stochastic AUPRC optimization loop.

    Per iteration: sample a batch, score it, resample the positive scores
    to length N+, EMA-update the auxiliary vector, differentiate the batch
    estimator plus the semi-variance regularizer w.r.t. the scores, chain
    into weight space, and take an SGD step with decoupled weight decay.

    Returns (trained model copy, auxiliary vector, trace). Deterministic
    given (cfg, rng); the input model is not modified.
    """
    if cfg.beta * cfg.n_pos > 2.0:
        warnings.warn(
            f"beta * n_pos = {cfg.beta * cfg.n_pos:.3g} > 2; the EMA may be too fast "
            "for a stable auxiliary vector",
            stacklevel=2,
        )
    gen = _as_generator(rng if rng is not None else RngHandle(cfg.seed))
    model = model.copy()
    bound = model.score_bound
    icfg = InterpConfig(dataset.n_pos, -bound, bound)
    params = cfg.surrogate
    if cfg.use_dataset_prior:
        params = replace(params, prior_pi=dataset.prior_pi)
    eval_set = val_dataset if val_dataset is not None else dataset

    v = None
    trace = TrainTrace()
    for t in range(1, cfg.max_iters + 1):
        batch = sample_batch(dataset, cfg.n_pos, cfg.n_neg, gen)
        xp = dataset.positives[batch.pos_indices]
        xn = dataset.negatives[batch.neg_indices]
        sp = forward(model, xp)
        sn = forward(model, xn)
        if not (np.all(np.isfinite(sp)) and np.all(np.isfinite(sn))):
            raise DivergenceError(t, "non-finite scores")

        phi = interpolate(sp, icfg)
        if v is None:
            v = AuxVector(phi, beta=cfg.beta, step_count=1)  # first batch, beta_1 = 1
        else:
            v = ema_update(v, phi, cfg.beta)

        est = batch_estimator_grad(sp, sn, v, params)
        reg_val, reg_dp, reg_dn = semi_variance(sp, sn, cfg.lambda1, cfg.lambda2)
        grads = backward_scores(model, xp, est.d_pos + reg_dp)
        for name, g in backward_scores(model, xn, est.d_neg + reg_dn).items():
            grads[name] = grads[name] + g

        gnorm = float(np.linalg.norm(flatten_weights(grads)))
        if not (math.isfinite(est.value) and math.isfinite(reg_val) and math.isfinite(gnorm)):
            raise DivergenceError(t, "non-finite loss or gradient")

        eta = lr_at(cfg.lr_schedule, t)
        with np.errstate(over="ignore", invalid="ignore"):  # guard below reports it
            for name, w in model.weights.items():
                w -= eta * (grads[name] + cfg.weight_decay * w)
        if not all(np.all(np.isfinite(w)) for w in model.weights.values()):
            raise DivergenceError(t, "non-finite weights after update")

        if cfg.eval_every > 0 and (t % cfg.eval_every == 0 or t == cfg.max_iters):
            val = evaluate_auprc(model, eval_set)
        else:
            val = math.nan
        trace.append(t, est.value, reg_val, gnorm, eta, val)
    return model, v, trace
