"""Evaluation metrics: estimation error, decision change, error probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UndefinedRatioError


@dataclass(frozen=True)
class ThresholdPolicy:
    """Wake-up threshold on the estimated load factor."""

    lambda_th: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.lambda_th < 1.0:
            raise ValueError("lambda_th must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class SlotMetrics:
    """Metrics recorded for one (iteration, slot) pair. NaN marks undefined."""

    estimation_error: float
    power_true: float
    power_est: float
    decision_change_rate: float
    p_err_off_on: float
    p_err_on_off: float
    skipped_zero_load: int = 0


def estimation_error(lambda_true: float, lambda_hat: float) -> float:
    """Relative error |lambda_true - lambda_hat| / lambda_true."""
    if lambda_true == 0.0:
        raise UndefinedRatioError("relative error is undefined at zero true load")
    return abs(lambda_true - lambda_hat) / lambda_true


def mean_estimation_error(pairs) -> tuple[float, int]:
    """Mean relative error over (true, estimated) pairs.

    Zero-true-load samples are skipped and counted separately rather than
    poisoning the average; returns (mean or NaN, skipped count).
    """
    errors = []
    skipped = 0
    for lam, lam_hat in pairs:
        try:
            errors.append(estimation_error(lam, lam_hat))
        except UndefinedRatioError:
            skipped += 1
    if not errors:
        return math.nan, skipped
    return math.fsum(errors) / len(errors), skipped


def decision_change_rate(delta_true, delta_est) -> float:
    """Fraction of on/off bits that differ (offload sinks are ignored)."""
    bits_true = tuple(delta_true.delta) if hasattr(delta_true, "delta") else tuple(delta_true)
    bits_est = tuple(delta_est.delta) if hasattr(delta_est, "delta") else tuple(delta_est)
    if len(bits_true) != len(bits_est):
        raise ValueError("state vectors must have equal length")
    return sum(a != b for a, b in zip(bits_true, bits_est)) / len(bits_true)


def threshold_policy(lambda_hat: float, policy: ThresholdPolicy) -> bool:
    """ON iff the estimated load strictly exceeds the threshold."""
    if not 0.0 <= lambda_hat <= 1.0:
        raise ValueError(f"estimated load {lambda_hat} outside [0, 1]")
    return lambda_hat > policy.lambda_th


def empirical_p_err(samples, policy: ThresholdPolicy) -> tuple[float | None, float | None]:
    """Empirical over/under-estimation probabilities around the threshold.

    samples: iterable of (lambda_true, lambda_hat). Returns (p_off_on,
    p_on_off); a component is None when its conditioning event never occurs.

    p_off_on conditions on truly-low cells (lambda_true <= th) and counts
    estimates strictly above the threshold; p_on_off conditions on truly-high
    cells (lambda_true >= th) and counts estimates strictly below it.
    """
    low_total = low_wrong = high_total = high_wrong = 0
    th = policy.lambda_th
    for lam, lam_hat in samples:
        if lam <= th:
            low_total += 1
            if lam_hat > th:
                low_wrong += 1
        if lam >= th:
            high_total += 1
            if lam_hat < th:
                high_wrong += 1
    p_off_on = low_wrong / low_total if low_total else None
    p_on_off = high_wrong / high_total if high_total else None
    return p_off_on, p_on_off
