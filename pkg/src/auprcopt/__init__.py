"""Stochastic AUPRC optimization toolkit: exact and surrogate PR metrics,
a sampling-rate-invariant batch estimator with auxiliary-vector EMA,
score interpolation, an SGD training loop, and a seeded Monte-Carlo
experiment lab."""

__version__ = "0.1.0"

from .core import (
    Batch,
    Dataset,
    LabeledVector,
    RngHandle,
    ScoreSet,
    load_dataset,
    sample_batch,
)
from .estimator import (
    AuxVector,
    EstimatorGradients,
    ap_estimator,
    ap_estimator_grad,
    batch_estimator,
    batch_estimator_grad,
)
from .interp import InterpConfig, interp_sup_error, interpolate
from .metrics import PRCurve, ap_loss, empirical_auprc, pr_curve, surrogate_risk
from .surrogate import SurrogateParams, ell1, ell1_prime, ell2, ell2_prime, sigma, sigma_prime
from .trainer import (
    LrSchedule,
    ScorerModel,
    TrainConfig,
    TrainTrace,
    backward_scores,
    ema_update,
    forward,
    init_model,
    lr_at,
    semi_variance,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
