"""Self-paced regularizers and their closed-form minimum-weight maps.

Two pace penalties over a sample weight w in [0, 1]: the hard penalty
-lam*w gates samples in or out entirely, the soft penalty lam*(w^2/2 - w)
fades them in linearly. For a fixed per-sample loss, minimizing
w*loss + penalty over w in [0, 1] has a closed form (`closed_form_weight`);
`oracle_weight` recovers the same minimum by brute-force grid search and
exists purely to validate the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class RegularizerKind(Enum):
    HARD = "hard"
    SOFT = "soft"

    @classmethod
    def parse(cls, value) -> "RegularizerKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown regularizer kind {value!r}; use 'hard' or 'soft'") from None


@dataclass(frozen=True)
class WeightSolution:
    weight: float
    objective_value: float


def _check_lambda(lam):
    if not lam > 0:
        raise ValueError(f"pace parameter must be positive, got {lam}")


def regularizer_value(kind: RegularizerKind, w: float, lam: float) -> float:
    """Penalty value at weight w."""
    _check_lambda(lam)
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w}")
    if kind is RegularizerKind.HARD:
        return -lam * w
    return lam * (0.5 * w * w - w)


def regularizer_values(kind: RegularizerKind, weights, lam: float) -> np.ndarray:
    """Vectorized penalty for an array of weights."""
    _check_lambda(lam)
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError("weights must lie in [0, 1]")
    if kind is RegularizerKind.HARD:
        return -lam * w
    return lam * (0.5 * w * w - w)


def closed_form_weight(kind: RegularizerKind, loss: float, lam: float) -> WeightSolution:
    """Argmin over w in [0, 1] of w*loss + penalty(w).

    Hard: w = 1 if loss < lam else 0. Soft: w = 1 - loss/lam if loss < lam
    else 0. The boundary loss == lam maps to 0 for both kinds.
    """
    _check_lambda(lam)
    if loss < 0:
        raise ValueError(f"loss must be non-negative, got {loss}")
    if kind is RegularizerKind.HARD:
        w = 1.0 if loss < lam else 0.0
    else:
        w = 1.0 - loss / lam if loss < lam else 0.0
    return WeightSolution(w, w * loss + regularizer_value(kind, w, lam))


def closed_form_weights(kind: RegularizerKind, losses, lam: float) -> np.ndarray:
    """Vectorized closed-form weight map, identical arithmetic to the scalar form."""
    _check_lambda(lam)
    l = np.asarray(losses, dtype=np.float64)
    if np.any(l < 0):
        raise ValueError("losses must be non-negative")
    if kind is RegularizerKind.HARD:
        return np.where(l < lam, 1.0, 0.0)
    return np.where(l < lam, 1.0 - l / lam, 0.0)


def oracle_weight(
    kind: RegularizerKind, loss: float, lam: float, grid_steps: int = 100000
) -> WeightSolution:
    """Brute-force minimizer of w*loss + penalty(w) over an equispaced grid.

    Evaluates grid_steps + 1 points in [0, 1] and returns the first
    minimizer. Deliberately independent of the closed form above.
    """
    _check_lambda(lam)
    if loss < 0:
        raise ValueError(f"loss must be non-negative, got {loss}")
    if grid_steps < 1000:
        raise ValueError(f"grid_steps must be at least 1000, got {grid_steps}")
    grid = np.linspace(0.0, 1.0, grid_steps + 1)
    if kind is RegularizerKind.HARD:
        objective = grid * loss - lam * grid
    else:
        objective = grid * loss + lam * (0.5 * grid * grid - grid)
    i = int(np.argmin(objective))
    return WeightSolution(float(grid[i]), float(objective[i]))
