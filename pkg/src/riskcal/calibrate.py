"""End-to-end calibration drivers.

Each driver computes one p-value per grid point from the risk matrix,
applies the requested family-wise-error-rate procedure, and picks a single
winner from the certified set by mean calibration reward.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .core import (
    CalibrationResult,
    ControlSpec,
    HyperGrid,
    RiskMatrix,
    ValidationError,
    validate_risk_matrix,
)
from .fwer import FwerOutcome, bonferroni, fixed_sequence_test
from .pvalues import (
    DEFAULT_TOL,
    empirical_mean_risk,
    hoeffding_p_value,
    quantile_p_value,
)

__all__ = [
    "select_best",
    "calibrate_mean_risk",
    "calibrate_quantile_risk",
    "calibrate",
]


def select_best(
    certified: Sequence[int], rewards: Mapping[int, float]
) -> int | None:
    """Pick the certified id with the largest mean reward; ties go to the smallest id.

    Returns None when the certified set is empty. Every certified id must
    have a reward.
    """
    ids = [int(i) for i in certified]
    if not ids:
        return None
    missing = [i for i in ids if i not in rewards]
    if missing:
        raise ValidationError(f"missing reward for certified ids {missing}")
    return max(ids, key=lambda i: (float(rewards[i]), -i))


def _mean_rewards(
    m: RiskMatrix, rewards: np.ndarray | None
) -> dict[int, float]:
    """Per-id mean calibration reward; defaults to negated mean risk."""
    if rewards is None:
        col_means = m.values.mean(axis=0)
        return {j: -float(col_means[j]) for j in range(m.n_points)}
    arr = np.asarray(rewards, dtype=np.float64)
    if arr.shape != m.values.shape:
        raise ValidationError(
            f"reward matrix shape {arr.shape} does not match risk matrix {m.values.shape}"
        )
    if not np.isfinite(arr).all():
        raise ValidationError("reward matrix contains non-finite values")
    col_means = arr.mean(axis=0)
    return {j: float(col_means[j]) for j in range(arr.shape[1])}


def _apply_fwer(
    p_values: Sequence[float], g: HyperGrid, spec: ControlSpec
) -> FwerOutcome:
    if spec.fwer == "bonferroni":
        return bonferroni(p_values, spec.delta)
    ordering = spec.ordering if spec.ordering is not None else g.ids
    return fixed_sequence_test(p_values, ordering, spec.delta)


def _finish(
    p_values: list[float],
    m: RiskMatrix,
    g: HyperGrid,
    spec: ControlSpec,
    rewards: np.ndarray | None,
    seed: int | None,
) -> CalibrationResult:
    outcome = _apply_fwer(p_values, g, spec)
    selected = select_best(outcome.certified, _mean_rewards(m, rewards))
    return CalibrationResult(
        p_values=tuple(p_values),
        certified=outcome.certified,
        selected=selected,
        spec=spec,
        n=m.n,
        seed=seed,
    )


def calibrate_mean_risk(
    m: RiskMatrix,
    g: HyperGrid,
    spec: ControlSpec,
    rewards: np.ndarray | None = None,
    seed: int | None = None,
) -> CalibrationResult:
    """Certify grid points whose mean risk is <= spec.alpha, via Hoeffding p-values.

    Requires unit-bounded risks (m.bounded_unit True) and alpha in [0, 1].
    """
    if spec.method != "mean":
        raise ValidationError(f"spec.method must be 'mean', got {spec.method!r}")
    if not m.bounded_unit:
        raise ValidationError(
            "mean-risk calibration requires bounded_unit=True: the Hoeffding "
            "p-value is only valid for risks in [0, 1]"
        )
    if spec.alpha > 1.0:
        raise ValidationError(
            f"alpha must lie in [0, 1] for mean-risk calibration, got {spec.alpha}"
        )
    validate_risk_matrix(m, g)
    p_values = [
        hoeffding_p_value(empirical_mean_risk(m.column(j)), m.n, spec.alpha)
        for j in range(m.n_points)
    ]
    return _finish(p_values, m, g, spec, rewards, seed)


def calibrate_quantile_risk(
    m: RiskMatrix,
    g: HyperGrid,
    spec: ControlSpec,
    rewards: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    seed: int | None = None,
) -> CalibrationResult:
    """Certify grid points whose q-quantile risk is <= spec.alpha.

    Uses the order-statistic confidence bound inversion per column; no
    boundedness of the risk is required.
    """
    if spec.method != "quantile":
        raise ValidationError(f"spec.method must be 'quantile', got {spec.method!r}")
    validate_risk_matrix(m, g)
    assert spec.q is not None  # enforced by ControlSpec
    p_values = [
        quantile_p_value(m.column(j), spec.q, spec.alpha, tol=tol)
        for j in range(m.n_points)
    ]
    return _finish(p_values, m, g, spec, rewards, seed)


def calibrate(
    m: RiskMatrix,
    g: HyperGrid,
    spec: ControlSpec,
    rewards: np.ndarray | None = None,
    seed: int | None = None,
) -> CalibrationResult:
    """Dispatch to the mean or quantile driver per spec.method."""
    if spec.method == "mean":
        return calibrate_mean_risk(m, g, spec, rewards=rewards, seed=seed)
    return calibrate_quantile_risk(m, g, spec, rewards=rewards, seed=seed)
