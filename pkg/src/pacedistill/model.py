"""Fully-connected classifier with handwritten forward/backward and Adam.

Parameters are plain float64 arrays. The backward pass differentiates the
weighted objective mean_i[w_i * CE_i + gamma * phi_i * KL_i] with the
per-sample weights held fixed (they come from the closed-form pace maps,
see the curriculum module). Gradients follow the same probability clamping
as the loss, so central finite differences of the returned loss match the
analytic gradient everywhere off the clamp boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .numerics import PROB_FLOOR, softmax_rows


@dataclass
class ModelParameters:
    """Per-layer weight matrices (fan_in, fan_out) and bias vectors (fan_out,).

    Also used as a plain shape-mirroring container for gradients and
    optimizer moments.
    """

    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {k}: bias shape {b.shape} does not match {w.shape}")
            if k > 0 and self.weights[k - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {k}: input size does not chain from layer {k - 1}")

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def num_layers(self):
        return len(self.weights)

    def copy(self) -> "ModelParameters":
        return ModelParameters([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass(frozen=True)
class TeacherSnapshot:
    """Frozen deep copy of the student taken at the end of source_epoch."""

    params: ModelParameters
    source_epoch: int


@dataclass
class AdamState:
    first_moment: ModelParameters
    second_moment: ModelParameters
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_params(layer_sizes, rng) -> ModelParameters:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"layer_sizes must be >= 2 positive sizes, got {layer_sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return ModelParameters(weights, biases)


def zeros_like_params(params: ModelParameters) -> ModelParameters:
    return ModelParameters(
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def init_adam_state(params, beta1=0.9, beta2=0.999, epsilon=1e-8) -> AdamState:
    return AdamState(zeros_like_params(params), zeros_like_params(params), 0, beta1, beta2, epsilon)


def _as_batch(params, batch):
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[0]:
        raise ValueError(
            f"batch shape {x.shape} does not match input size {params.weights[0].shape[0]}"
        )
    return np.ascontiguousarray(x)


def _forward_cached(params, x):
    """Forward pass keeping pre-activations and layer inputs for backprop."""
    last = params.num_layers - 1
    pre_acts, layer_inputs = [], [x]
    h = x
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = backend.affine(h, w, b)
        pre_acts.append(z)
        h = np.maximum(z, 0.0) if k < last else z
        if k < last:
            layer_inputs.append(h)
    return h, pre_acts, layer_inputs


def forward(params: ModelParameters, batch) -> np.ndarray:
    """Logits for a batch: affine + ReLU on hidden layers, affine on the output."""
    x = _as_batch(params, batch)
    logits, _, _ = _forward_cached(params, x)
    return logits


def predict_probs(params: ModelParameters, batch) -> np.ndarray:
    """Row-wise class probabilities for a batch."""
    return softmax_rows(forward(params, batch))


def backward(
    params: ModelParameters,
    batch,
    labels,
    sample_weights,
    teacher_probs,
    distill_weights,
    gamma: float,
):
    """Gradient and value of the weighted batch objective.

    Objective: mean_i [ w_i * CE(p_i, y_i) + gamma * phi_i * KL(t_i || p_i) ],
    where p_i is the student softmax output and t_i the fixed teacher
    probabilities. Weights w, phi and gamma are constants. Returns
    (gradients as a ModelParameters container, loss).
    """
    x = _as_batch(params, batch)
    n, n_classes = x.shape[0], params.layer_sizes[-1]
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError(f"labels shape {y.shape} does not match batch of {n}")
    if n and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError("label out of range")
    w = np.asarray(sample_weights, dtype=np.float64)
    phi = np.asarray(distill_weights, dtype=np.float64)
    if w.shape != (n,) or phi.shape != (n,):
        raise ValueError("sample_weights and distill_weights must have one entry per row")
    if teacher_probs is None:
        if gamma != 0.0 and np.any(phi != 0.0):
            raise ValueError("teacher_probs required when distillation weights are active")
        pt = None
    else:
        pt = np.asarray(teacher_probs, dtype=np.float64)
        if pt.shape != (n, n_classes):
            raise ValueError(f"teacher_probs shape {pt.shape} does not match ({n}, {n_classes})")

    logits, pre_acts, layer_inputs = _forward_cached(params, x)
    ps = softmax_rows(logits)
    rows = np.arange(n)
    p_true = ps[rows, y]
    ce = -np.log(np.maximum(p_true, PROB_FLOOR))
    loss_vec = w * ce

    # d(loss)/d(logits); rows where the clamp binds are locally constant
    grad_z = ps.copy()
    grad_z[rows, y] -= 1.0
    grad_z[p_true <= PROB_FLOOR] = 0.0
    grad_z *= (w / n)[:, None]

    if pt is not None:
        kl = np.sum(
            pt * (np.log(np.maximum(pt, PROB_FLOOR)) - np.log(np.maximum(ps, PROB_FLOOR))),
            axis=1,
        )
        loss_vec = loss_vec + gamma * phi * kl
        mask = ps > PROB_FLOOR
        covered = np.sum(pt * mask, axis=1)
        grad_z += (gamma * phi / n)[:, None] * (ps * covered[:, None] - pt * mask)

    loss = float(np.mean(loss_vec)) if n else 0.0

    grad_w = [None] * params.num_layers
    grad_b = [None] * params.num_layers
    delta = grad_z
    for k in reversed(range(params.num_layers)):
        grad_w[k] = backend.matmul_at_b(layer_inputs[k], delta)
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = backend.matmul_a_bt(delta, params.weights[k]) * (pre_acts[k - 1] > 0.0)
    return ModelParameters(grad_w, grad_b), loss


def _check_mirror(params, other, what):
    if [w.shape for w in params.weights] != [w.shape for w in other.weights]:
        raise ValueError(f"{what} shapes do not mirror the parameters")


def optimizer_step(params: ModelParameters, state: AdamState, grad: ModelParameters, lr: float):
    """One Adam update with bias correction. Returns (new_params, new_state)."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    _check_mirror(params, grad, "gradient")
    _check_mirror(params, state.first_moment, "optimizer state")
    t = state.step_count + 1
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t

    def update(p, g, m, v):
        m_new = b1 * m + (1.0 - b1) * g
        v_new = b2 * v + (1.0 - b2) * g * g
        p_new = p - lr * (m_new / corr1) / (np.sqrt(v_new / corr2) + eps)
        return p_new, m_new, v_new

    new_w, new_b, mw, vw, mb, vb = [], [], [], [], [], []
    for k in range(params.num_layers):
        p_new, m_new, v_new = update(
            params.weights[k], grad.weights[k],
            state.first_moment.weights[k], state.second_moment.weights[k],
        )
        new_w.append(p_new), mw.append(m_new), vw.append(v_new)
        p_new, m_new, v_new = update(
            params.biases[k], grad.biases[k],
            state.first_moment.biases[k], state.second_moment.biases[k],
        )
        new_b.append(p_new), mb.append(m_new), vb.append(v_new)
    return (
        ModelParameters(new_w, new_b),
        AdamState(ModelParameters(mw, mb), ModelParameters(vw, vb), t, b1, b2, eps),
    )


def snapshot(params: ModelParameters, epoch: int) -> TeacherSnapshot:
    """Deep-copied teacher; later student updates cannot touch it."""
    return TeacherSnapshot(params.copy(), int(epoch))


def save_params(path, params: ModelParameters, epoch: int = 0, meta: dict = None):
    """Write params as a one-line JSON header + raw little-endian float64.

    Layout after the header newline: for each layer, the row-major weight
    matrix followed by the bias vector. `meta` entries are merged into the
    header; load_params ignores them. Round-trips bit-exactly.
    """
    header = json.dumps(
        {"layer_sizes": params.layer_sizes, "epoch": int(epoch), "dtype": "<f8",
         **(meta or {})},
        sort_keys=True,
    )
    with open(path, "wb") as f:
        f.write(header.encode("utf-8") + b"\n")
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path):
    """Inverse of save_params. Returns (ModelParameters, epoch)."""
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        raw = f.read()
    sizes = header["layer_sizes"]
    weights, biases, offset = [], [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(raw, dtype="<f8", count=fan_in * fan_out, offset=offset)
        offset += w.nbytes
        b = np.frombuffer(raw, dtype="<f8", count=fan_out, offset=offset)
        offset += b.nbytes
        weights.append(w.reshape(fan_in, fan_out).copy())
        biases.append(b.copy())
    if offset != len(raw):
        raise ValueError(f"{path}: trailing bytes do not match the declared layer sizes")
    return ModelParameters(weights, biases), int(header["epoch"])
