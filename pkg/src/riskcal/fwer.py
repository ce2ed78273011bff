"""Family-wise-error-rate controlling selection from a vector of p-values.

Both procedures keep the probability of certifying any truly unreliable
hyperparameter at or below delta. Strictness follows the respective
definitions exactly: Bonferroni certifies on p strictly below delta/m,
fixed sequence testing walks its ordering while p <= delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ValidationError

__all__ = ["FwerOutcome", "bonferroni", "fixed_sequence_test"]


@dataclass(frozen=True)
class FwerOutcome:
    certified: tuple[int, ...]
    procedure: str
    threshold_used: float

    def __post_init__(self) -> None:
        if len(set(self.certified)) != len(self.certified):
            raise ValidationError("certified set contains duplicate ids")


def _check_p_values(p_values: Sequence[float]) -> list[float]:
    ps = [float(p) for p in p_values]
    if not ps:
        raise ValidationError("p-value vector must be non-empty")
    for j, p in enumerate(ps):
        if not np.isfinite(p) or not (0.0 <= p <= 1.0):
            raise ValidationError(f"p-value at position {j} outside [0, 1]: {p}")
    return ps


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (0.0 < delta < 1.0):
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    return delta


def bonferroni(p_values: Sequence[float], delta: float) -> FwerOutcome:
    """Certify every id whose p-value is strictly below delta / len(p_values)."""
    ps = _check_p_values(p_values)
    delta = _check_delta(delta)
    threshold = delta / len(ps)
    certified = tuple(j for j, p in enumerate(ps) if p < threshold)
    return FwerOutcome(certified=certified, procedure="bonferroni", threshold_used=threshold)


def fixed_sequence_test(
    p_values: Sequence[float], ordering: Sequence[int], delta: float
) -> FwerOutcome:
    """Walk a caller-supplied ordering, certifying the maximal prefix with p <= delta.

    The walk stops at the first id whose p-value exceeds delta; ids after
    the stop are never examined. The ordering must be a permutation of all
    grid ids and must come from prior knowledge, never from the calibration
    data itself, or the error-rate guarantee is lost.
    """
    ps = _check_p_values(p_values)
    delta = _check_delta(delta)
    order = [int(i) for i in ordering]
    if sorted(order) != list(range(len(ps))):
        raise ValidationError(
            f"ordering must be a permutation of 0..{len(ps) - 1}, got {order}"
        )
    certified: list[int] = []
    for i in order:
        if ps[i] <= delta:
            certified.append(i)
        else:
            break
    return FwerOutcome(certified=tuple(certified), procedure="fst", threshold_used=delta)
