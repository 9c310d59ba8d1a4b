"""Linear pace schedules and the warmup learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PaceSchedule:
    """Pace grows linearly: lambda(t) = lambda0 + alpha * t, t counted from 0."""

    lambda0: float
    alpha: float

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")


@dataclass(frozen=True)
class LearningRateSchedule:
    """Linear ramp from lr_init to lr_peak over warmup_epochs, constant after."""

    lr_init: float
    lr_peak: float
    warmup_epochs: int

    def __post_init__(self):
        if not 0 < self.lr_init <= self.lr_peak:
            raise ValueError(
                f"need 0 < lr_init <= lr_peak, got {self.lr_init} and {self.lr_peak}"
            )
        if self.warmup_epochs < 0:
            raise ValueError(f"warmup_epochs must be non-negative, got {self.warmup_epochs}")


def pace_at(schedule: PaceSchedule, epoch: int) -> float:
    """Pace value at a 0-based epoch."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return schedule.lambda0 + schedule.alpha * epoch


def lr_at(schedule: LearningRateSchedule, epoch: int) -> float:
    """Learning rate at a 0-based epoch."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    if epoch >= schedule.warmup_epochs:
        return schedule.lr_peak
    frac = epoch / schedule.warmup_epochs
    return schedule.lr_init + (schedule.lr_peak - schedule.lr_init) * frac
