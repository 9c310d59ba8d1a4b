"""Paced training engine: per-epoch curriculum weights and the epoch loop.

Each epoch alternates two steps. First, with the parameters fixed, the
per-sample weights are set in closed form: the current-model channel
weights the data CE term by how well the student already fits a sample,
and the past-model channel gates the distillation term by the teacher's
own CE against ground truth (an unconfident teacher hands the sample back
to the ground-truth loss alone). Second, with the weights frozen, the
parameters take mini-batch gradient steps on the weighted objective. The
teacher is a deep-copied snapshot of the student from the previous epoch;
the first epoch trains without any distillation term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import model
from .data import Dataset
from .exceptions import ConfigError, DivergenceError
from .metrics import evaluate
from .numerics import per_sample_cross_entropy, per_sample_kl
from .regularizer import RegularizerKind, closed_form_weights, regularizer_values
from .schedule import LearningRateSchedule, PaceSchedule, lr_at, pace_at


class Ablation(Enum):
    BASELINE = "baseline"  # all weights 1, no distillation
    PCL_ONLY = "pcl_only"  # paced data weights, no distillation
    PCD_ONLY = "pcd_only"  # all data weights 1, paced distillation
    FULL = "full"

    @classmethod
    def parse(cls, value) -> "Ablation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown ablation {value!r}; options: {[a.value for a in cls]}"
            ) from None

    @property
    def uses_pcl(self) -> bool:
        return self in (Ablation.PCL_ONLY, Ablation.FULL)

    @property
    def uses_pcd(self) -> bool:
        return self in (Ablation.PCD_ONLY, Ablation.FULL)


@dataclass
class SampleWeighting:
    """Weights and the per-sample losses that produced them, for one epoch.

    pcd fields are None on epochs trained without a teacher, and pcl/pcd
    losses are None when the corresponding channel is disabled (weights
    forced to 1 by the ablation).
    """

    epoch: int
    pcl_weights: np.ndarray
    pcd_weights: Optional[np.ndarray]
    pcl_losses: Optional[np.ndarray]
    pcd_losses: Optional[np.ndarray]
    lambda_w: float
    lambda_phi: float


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    gamma: float = 1.0
    pcl_kind: RegularizerKind = RegularizerKind.HARD
    pcd_kind: RegularizerKind = RegularizerKind.SOFT
    pcl_schedule: PaceSchedule = PaceSchedule(0.6, 0.006)
    pcd_schedule: PaceSchedule = PaceSchedule(0.8, 0.003)
    lr_schedule: LearningRateSchedule = LearningRateSchedule(1e-6, 1e-4, 10)
    seed: int = 0
    ablation: Ablation = Ablation.FULL
    hidden_sizes: tuple = (32, 32)
    ece_bins: int = 10
    freeze_model: bool = False  # diagnostic: skip parameter updates

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")
        if not self.hidden_sizes or any(int(h) < 1 for h in self.hidden_sizes):
            raise ConfigError(f"hidden_sizes must be positive, got {self.hidden_sizes}")
        if self.ece_bins < 1:
            raise ConfigError(f"ece_bins must be >= 1, got {self.ece_bins}")
        for name, value in (("pcl_kind", self.pcl_kind), ("pcd_kind", self.pcd_kind)):
            if not isinstance(value, RegularizerKind):
                raise ConfigError(f"{name} must be a RegularizerKind, got {value!r}")
        if not isinstance(self.ablation, Ablation):
            raise ConfigError(f"ablation must be an Ablation, got {self.ablation!r}")


TRACE_COLUMNS = (
    "epoch",
    "lambda_w",
    "lambda_phi",
    "frac_w_nonzero",
    "frac_phi_nonzero",
    "mean_w",
    "mean_phi",
    "train_loss",
    "val_acc",
    "val_auc",
    "val_ece",
    "val_nll",
)


@dataclass
class TraceRow:
    epoch: int
    lambda_w: float
    lambda_phi: float
    frac_w_nonzero: float
    frac_phi_nonzero: float
    mean_w: float
    mean_phi: float
    train_loss: float
    val_acc: float
    val_auc: float
    val_ece: float
    val_nll: float


@dataclass
class TrainingTrace:
    rows: list = field(default_factory=list)

    def write_csv(self, path, config_hash: Optional[str] = None):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            if config_hash is not None:
                f.write(f"# config_hash={config_hash}\n")
            f.write(",".join(TRACE_COLUMNS) + "\n")
            for row in self.rows:
                cells = [str(row.epoch)] + [
                    repr(float(getattr(row, col))) for col in TRACE_COLUMNS[1:]
                ]
                f.write(",".join(cells) + "\n")

    @classmethod
    def read_csv(cls, path) -> "TrainingTrace":
        with open(path, encoding="utf-8") as f:
            lines = [ln.rstrip("\n") for ln in f if ln.strip() and not ln.startswith("#")]
        if not lines or tuple(lines[0].split(",")) != TRACE_COLUMNS:
            raise ValueError(f"{path}: not a training trace (bad or missing header)")
        rows = []
        for i, line in enumerate(lines[1:], start=2):
            cells = line.split(",")
            if len(cells) != len(TRACE_COLUMNS):
                raise ValueError(f"{path}: line {i} has {len(cells)} fields, "
                                 f"expected {len(TRACE_COLUMNS)}")
            try:
                rows.append(TraceRow(int(cells[0]), *(float(c) for c in cells[1:])))
            except ValueError:
                raise ValueError(f"{path}: line {i} is not numeric") from None
        return cls(rows)


def determine_pcl_curriculum(params, dataset: Dataset, lambda_w: float, kind: RegularizerKind):
    """Current-model channel: per-sample student CE and its closed-form weights.

    A no-gradient pass over the full training set. Returns (weights, losses).
    """
    probs = model.predict_probs(params, dataset.features)
    losses = per_sample_cross_entropy(probs, dataset.labels)
    return closed_form_weights(kind, losses, lambda_w), losses


def determine_pcd_curriculum(
    teacher: Optional[model.TeacherSnapshot], dataset: Dataset, lambda_phi: float,
    kind: RegularizerKind,
):
    """Past-model channel: teacher CE against ground truth gates distillation.

    Samples where the teacher itself is unconfident (loss >= lambda_phi) get
    weight 0, so they fall back to the ground-truth term alone.
    """
    if teacher is None:
        raise RuntimeError("no teacher snapshot available; needs a completed prior epoch")
    probs = model.predict_probs(teacher.params, dataset.features)
    losses = per_sample_cross_entropy(probs, dataset.labels)
    return closed_form_weights(kind, losses, lambda_phi), losses


def epoch_loss(student, teacher, batch, labels, pcl_weights, pcd_weights, gamma: float) -> float:
    """Mean weighted data term over a batch: mean_i[w_i*CE_i + gamma*phi_i*KL_i]."""
    batch = np.asarray(batch, dtype=np.float64)
    n = batch.shape[0]
    w = np.asarray(pcl_weights, dtype=np.float64)
    phi = np.asarray(pcd_weights, dtype=np.float64)
    if w.shape != (n,) or phi.shape != (n,):
        raise ValueError("weight slices must align with the batch rows")
    probs = model.predict_probs(student, batch)
    terms = w * per_sample_cross_entropy(probs, labels)
    if gamma != 0.0 and np.any(phi != 0.0):
        if teacher is None:
            raise ValueError("teacher required when distillation weights are active")
        teacher_probs = model.predict_probs(teacher.params, batch)
        terms = terms + gamma * phi * per_sample_kl(teacher_probs, probs)
    return float(np.mean(terms))


def paced_objective(
    student, teacher, batch, labels, pcl_weights, pcd_weights, gamma,
    pcl_kind: RegularizerKind, lambda_w: float,
    pcd_kind: RegularizerKind, lambda_phi: float,
) -> float:
    """Full reported objective: data term plus the mean pace penalties."""
    penalty = np.mean(regularizer_values(pcl_kind, pcl_weights, lambda_w))
    penalty += np.mean(regularizer_values(pcd_kind, pcd_weights, lambda_phi))
    return epoch_loss(student, teacher, batch, labels, pcl_weights, pcd_weights, gamma) + float(
        penalty
    )


def train(
    config: TrainConfig,
    train_ds: Dataset,
    val_ds: Optional[Dataset] = None,
    epoch_callback: Optional[Callable] = None,
):
    """Run the paced training loop. Returns (ModelParameters, TrainingTrace).

    Weights are recomputed once per epoch over the full training set and
    held constant through that epoch's mini-batch steps; the teacher is
    snapshotted at each epoch end and consulted from the next epoch on.
    Zero-weight samples still appear in batches (contributing nothing) so
    batch schedules stay aligned across ablation arms sharing a seed.

    epoch_callback(epoch, params, teacher, weighting), if given, is invoked
    at the end of every epoch for diagnostics.
    """
    config.validate()
    n = train_ds.n
    rng = np.random.default_rng(config.seed)
    sizes = [train_ds.dim, *map(int, config.hidden_sizes), train_ds.class_count]
    params = model.init_params(sizes, rng)
    state = model.init_adam_state(params)
    teacher: Optional[model.TeacherSnapshot] = None
    gamma = config.gamma if config.ablation.uses_pcd else 0.0
    trace = TrainingTrace()

    for epoch in range(config.epochs):
        lambda_w = pace_at(config.pcl_schedule, epoch)
        lambda_phi = pace_at(config.pcd_schedule, epoch)

        if config.ablation.uses_pcl:
            w, pcl_losses = determine_pcl_curriculum(params, train_ds, lambda_w, config.pcl_kind)
        else:
            w, pcl_losses = np.ones(n), None

        distilling = config.ablation.uses_pcd and teacher is not None
        if distilling:
            phi, pcd_losses = determine_pcd_curriculum(
                teacher, train_ds, lambda_phi, config.pcd_kind
            )
            teacher_probs = model.predict_probs(teacher.params, train_ds.features)
        else:
            phi, pcd_losses, teacher_probs = np.zeros(n), None, None

        weighting = SampleWeighting(
            epoch, w, phi if distilling else None, pcl_losses, pcd_losses, lambda_w, lambda_phi
        )

        lr = lr_at(config.lr_schedule, epoch)
        perm = rng.permutation(n)
        if config.freeze_model:
            train_loss = epoch_loss(
                params, teacher, train_ds.features, train_ds.labels, w, phi, gamma
            )
        else:
            loss_sum = 0.0
            for start in range(0, n, config.batch_size):
                idx = perm[start : start + config.batch_size]
                grads, loss = model.backward(
                    params,
                    train_ds.features[idx],
                    train_ds.labels[idx],
                    w[idx],
                    None if teacher_probs is None else teacher_probs[idx],
                    phi[idx],
                    gamma,
                )
                if not np.isfinite(loss):
                    raise DivergenceError(f"non-finite loss at epoch {epoch}")
                params, state = model.optimizer_step(params, state, grads, lr)
                loss_sum += loss * idx.size
            train_loss = loss_sum / n

        if val_ds is not None:
            report = evaluate(
                model.predict_probs(params, val_ds.features), val_ds.labels, config.ece_bins
            )
            val_acc, val_ece, val_nll = report.acc, report.ece, report.nll
            val_auc = float("nan") if report.auc is None else report.auc
        else:
            val_acc = val_auc = val_ece = val_nll = float("nan")

        trace.rows.append(
            TraceRow(
                epoch,
                lambda_w,
                lambda_phi,
                float(np.mean(w > 0.0)),
                float(np.mean(phi > 0.0)),
                float(np.mean(w)),
                float(np.mean(phi)),
                train_loss,
                val_acc,
                val_auc,
                val_ece,
                val_nll,
            )
        )

        # snapshot only when another epoch will consult it; a 1-epoch run
        # never creates a teacher
        if config.ablation.uses_pcd and epoch + 1 < config.epochs:
            teacher = model.snapshot(params, epoch)
        if epoch_callback is not None:
            epoch_callback(epoch, params, teacher, weighting)

    return params, trace
