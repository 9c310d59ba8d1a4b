"""Paced-curriculum training with epoch-lagged self-distillation.

Per-sample importance weights come from closed-form minimizers of a
weighted loss plus a pace penalty; the pace grows linearly so harder
samples are admitted later. A frozen copy of the previous epoch's model
distills into the current one, gated per sample by the teacher's own
confidence. Includes a small MLP with handwritten gradients, evaluation
metrics, and a deterministic experiment CLI.
"""

__version__ = "0.1.0"

from . import backend
from .curriculum import (
    Ablation,
    SampleWeighting,
    TrainConfig,
    TrainingTrace,
    determine_pcd_curriculum,
    determine_pcl_curriculum,
    epoch_loss,
    paced_objective,
    train,
)
from .data import Dataset, SplitSpec, generate_synthetic, load_csv, split, standardize
from .exceptions import ConfigError, DivergenceError
from .metrics import MetricsReport, auc, classification_metrics, ece, evaluate, nll
from .model import (
    AdamState,
    ModelParameters,
    TeacherSnapshot,
    backward,
    forward,
    init_adam_state,
    init_params,
    load_params,
    optimizer_step,
    predict_probs,
    save_params,
    snapshot,
)
from .numerics import cross_entropy, kl_divergence, softmax
from .regularizer import (
    RegularizerKind,
    WeightSolution,
    closed_form_weight,
    closed_form_weights,
    oracle_weight,
    regularizer_value,
)
from .schedule import LearningRateSchedule, PaceSchedule, lr_at, pace_at

__all__ = [
    "Ablation",
    "AdamState",
    "ConfigError",
    "Dataset",
    "DivergenceError",
    "LearningRateSchedule",
    "MetricsReport",
    "ModelParameters",
    "PaceSchedule",
    "RegularizerKind",
    "SampleWeighting",
    "SplitSpec",
    "TeacherSnapshot",
    "TrainConfig",
    "TrainingTrace",
    "WeightSolution",
    "auc",
    "backend",
    "backward",
    "classification_metrics",
    "closed_form_weight",
    "closed_form_weights",
    "cross_entropy",
    "determine_pcd_curriculum",
    "determine_pcl_curriculum",
    "ece",
    "epoch_loss",
    "evaluate",
    "forward",
    "generate_synthetic",
    "init_adam_state",
    "init_params",
    "kl_divergence",
    "load_csv",
    "load_params",
    "lr_at",
    "nll",
    "optimizer_step",
    "oracle_weight",
    "pace_at",
    "paced_objective",
    "predict_probs",
    "regularizer_value",
    "save_params",
    "snapshot",
    "softmax",
    "split",
    "standardize",
    "train",
]
