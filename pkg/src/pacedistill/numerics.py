"""Numerically stable probability and loss primitives.

Everything operates on float64 NumPy arrays. Log-domain operands are
clamped at PROB_FLOOR so cross-entropy and KL stay finite even for
degenerate probabilities; this leaves well-conditioned values untouched.
"""

from __future__ import annotations

import numpy as np

PROB_FLOOR = 1e-12


def _check_logits(z, name="logits"):
    if z.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} must be finite")


def softmax(logits):
    """Max-subtracted softmax of a 1-D logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError("softmax expects a 1-D vector")
    _check_logits(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def softmax_rows(logits):
    """Row-wise max-subtracted softmax of a 2-D logit matrix."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("softmax_rows expects a 2-D matrix")
    _check_logits(z)
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs, label):
    """-log p[label], with the probability clamped at PROB_FLOOR."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("cross_entropy expects a 1-D probability vector")
    label = int(label)
    if not 0 <= label < p.size:
        raise ValueError(f"label {label} out of range for {p.size} classes")
    return float(-np.log(max(p[label], PROB_FLOOR)))


def per_sample_cross_entropy(probs, labels):
    """Vector of -log p_i[y_i] over the rows of a probability matrix."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels)
    if p.ndim != 2 or y.shape != (p.shape[0],):
        raise ValueError("probability matrix and labels are misaligned")
    if y.size and (y.min() < 0 or y.max() >= p.shape[1]):
        raise ValueError("label out of range")
    picked = p[np.arange(p.shape[0]), y]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def kl_divergence(p_teacher, p_student):
    """KL(p_teacher || p_student) with log operands clamped at PROB_FLOOR."""
    pt = np.asarray(p_teacher, dtype=np.float64)
    ps = np.asarray(p_student, dtype=np.float64)
    if pt.shape != ps.shape or pt.ndim != 1:
        raise ValueError("distributions must be 1-D vectors of equal length")
    return float(
        np.sum(pt * (np.log(np.maximum(pt, PROB_FLOOR)) - np.log(np.maximum(ps, PROB_FLOOR))))
    )


def per_sample_kl(p_teacher, p_student):
    """Row-wise KL(p_teacher || p_student) for two probability matrices."""
    pt = np.asarray(p_teacher, dtype=np.float64)
    ps = np.asarray(p_student, dtype=np.float64)
    if pt.shape != ps.shape or pt.ndim != 2:
        raise ValueError("probability matrices must have identical 2-D shapes")
    return np.sum(
        pt * (np.log(np.maximum(pt, PROB_FLOOR)) - np.log(np.maximum(ps, PROB_FLOOR))),
        axis=1,
    )
