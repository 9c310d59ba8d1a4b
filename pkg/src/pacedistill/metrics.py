"""Evaluation metrics: accuracy, sensitivity/specificity, AUC, ECE, NLL.

Sensitivity and specificity are defined for binary tasks only (class 1 is
positive); multi-class reports leave them as None and use a macro
one-vs-rest AUC. The argmax decision rule breaks ties toward the lower
class index.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .numerics import per_sample_cross_entropy

DEFAULT_ECE_BINS = 10


@dataclass
class MetricsReport:
    acc: float
    sen: Optional[float]
    spe: Optional[float]
    auc: Optional[float]
    ece: Optional[float]
    nll: Optional[float]
    n_samples: int

    def to_json(self) -> str:
        """Flat key-value JSON; undefined metrics serialize as null."""
        return json.dumps(asdict(self), sort_keys=True)


def _as_probs_labels(probs, labels):
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels)
    if p.ndim != 2 or y.shape != (p.shape[0],):
        raise ValueError("probability matrix and labels are misaligned")
    if p.shape[0] == 0:
        raise ValueError("need at least one sample")
    if y.min() < 0 or y.max() >= p.shape[1]:
        raise ValueError("label out of range")
    return p, y


def classification_metrics(probs, labels) -> MetricsReport:
    """Accuracy plus, for binary tasks, sensitivity and specificity.

    Probability-quality fields (auc/ece/nll) are left as None; `evaluate`
    fills the complete report.
    """
    p, y = _as_probs_labels(probs, labels)
    pred = np.argmax(p, axis=1)  # ties resolve to the lower class index
    acc = float(np.mean(pred == y))
    sen = spe = None
    if p.shape[1] == 2:
        pos = y == 1
        neg = ~pos
        if pos.any():
            sen = float(np.mean(pred[pos] == 1))
        if neg.any():
            spe = float(np.mean(pred[neg] == 0))
    return MetricsReport(acc, sen, spe, None, None, None, int(y.size))


def _average_ranks(scores):
    """1-based ranks with ties sharing their group's average rank."""
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    ranks = np.empty(s.size, dtype=np.float64)
    start = 0
    for i in range(1, s.size + 1):
        if i == s.size or s[i] != s[start]:
            ranks[start:i] = (start + 1 + i) / 2.0
            start = i
    out = np.empty_like(ranks)
    out[order] = ranks
    return out


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties at 0.5.

    Rank-sum formulation, equivalent to the trapezoidal ROC area.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and aligned")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: need both classes present")
    ranks = _average_ranks(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def ece(probs, labels, bins: int = DEFAULT_ECE_BINS) -> float:
    """Expected calibration error over equal-width, right-closed confidence bins.

    Confidence is the max class probability; ECE = sum_b (n_b/N)|acc_b - conf_b|.
    Empty bins contribute 0.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    p, y = _as_probs_labels(probs, labels)
    conf = p.max(axis=1)
    correct = (np.argmax(p, axis=1) == y).astype(np.float64)
    bin_idx = np.clip(np.ceil(conf * bins).astype(int) - 1, 0, bins - 1)
    total = 0.0
    for b in range(bins):
        members = bin_idx == b
        n_b = int(members.sum())
        if n_b == 0:
            continue
        total += (n_b / y.size) * abs(correct[members].mean() - conf[members].mean())
    return float(total)


def nll(probs, labels) -> float:
    """Mean negative log-probability of the true class (clamped log)."""
    p, y = _as_probs_labels(probs, labels)
    return float(np.mean(per_sample_cross_entropy(p, y)))


def evaluate(probs, labels, bins: int = DEFAULT_ECE_BINS) -> MetricsReport:
    """Complete MetricsReport for one evaluation pass.

    Binary AUC scores class-1 probability; multi-class AUC is the macro
    average of one-vs-rest AUCs over classes with both outcomes present
    (None if there are none).
    """
    p, y = _as_probs_labels(probs, labels)
    report = classification_metrics(p, y)
    if p.shape[1] == 2:
        try:
            report.auc = auc(p[:, 1], y)
        except ValueError:
            report.auc = None
    else:
        per_class = []
        for c in range(p.shape[1]):
            against = (y == c).astype(np.int64)
            if 0 < against.sum() < y.size:
                per_class.append(auc(p[:, c], against))
        report.auc = float(np.mean(per_class)) if per_class else None
    report.ece = ece(p, y, bins)
    report.nll = nll(p, y)
    return report
