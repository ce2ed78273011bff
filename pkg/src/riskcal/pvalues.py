"""Per-candidate p-values for the nulls "this hyperparameter is unreliable".

Two constructions are provided:

* a Hoeffding p-value for the null "mean risk > alpha", valid when the
  risk is bounded in [0, 1];
* a quantile p-value for the null "q-quantile risk > alpha", obtained by
  inverting a one-sided, distribution-free order-statistic confidence
  bound on the q-quantile. No boundedness is required.

All logarithms are natural logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ValidationError

__all__ = [
    "EPSILON_FLOOR",
    "DEFAULT_TOL",
    "QuantileBoundParams",
    "empirical_mean_risk",
    "empirical_quantile",
    "hoeffding_p_value",
    "bound_params",
    "quantile_upper_bound",
    "quantile_p_value",
]

# Search domain for the confidence-level inversion: p-values are reported in
# [EPSILON_FLOOR, 1], so they can never be exactly zero.
EPSILON_FLOOR = 1e-12
DEFAULT_TOL = 1e-9


def _as_risk_vector(risks: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(risks, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"risks must be a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError("risks must be non-empty")
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValidationError(f"non-finite risk value at position {bad}")
    return arr


def empirical_mean_risk(risks: Sequence[float] | np.ndarray) -> float:
    """Arithmetic mean of a non-empty vector of finite risk values."""
    return float(_as_risk_vector(risks).mean())


def empirical_quantile(values: Sequence[float] | np.ndarray, q: float) -> float:
    """Empirical (1-q)-quantile: the ceil(n*(1-q))-th smallest value.

    This is the smallest r with empirical CDF at r >= 1-q. A small
    relative slack guards the ceil against floating-point noise when
    n*(1-q) is an exact integer.
    """
    arr = _as_risk_vector(values)
    if not (0.0 < q < 1.0):
        raise ValidationError(f"q must lie in (0, 1), got {q}")
    n = arr.size
    x = n * (1.0 - q)
    k = math.ceil(x - 1e-12 * max(1.0, abs(x)))
    k = min(max(k, 1), n)
    return float(np.sort(arr)[k - 1])


def hoeffding_p_value(mean_risk: float, n: int, alpha: float) -> float:
    """p-value for the null "mean risk > alpha" from Hoeffding's inequality.

    Returns exp(-2 n ((alpha - mean_risk)_+)^2) in [0, 1], super-uniform
    under the null provided every risk value lies in [0, 1]; mean_risk and
    alpha must therefore lie in [0, 1] too. Mathematically the value is
    strictly positive, but it underflows to 0.0 for very large n * gap^2.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not (0.0 <= alpha <= 1.0) or not np.isfinite(alpha):
        raise ValidationError(
            f"alpha must lie in [0, 1] for the mean-risk p-value, got {alpha}"
        )
    if not (0.0 <= mean_risk <= 1.0) or not np.isfinite(mean_risk):
        raise ValidationError(
            f"mean risk must lie in [0, 1] for the mean-risk p-value, got {mean_risk}; "
            "this p-value is only valid for unit-bounded risks"
        )
    gap = max(0.0, alpha - mean_risk)
    return float(math.exp(-2.0 * n * gap * gap))


@dataclass(frozen=True)
class QuantileBoundParams:
    """Derived parameters of the order-statistic quantile confidence bound.

    For sample size n, outage rate q, and confidence failure probability
    epsilon, the bound uses

        r_n    = (1.4 * ln(ln(2.1 n)) + ln(10 / epsilon)) / n
        q_star = q - 1.5 * sqrt(q (1 - q) r_n) - 0.8 * r_n
        index  = floor(n * (1 - q_star))    (1-based order statistic)

    q_star <= q always, and r_n > 0 for every n >= 1, epsilon in (0, 1].
    When q_star <= 0 the bound is vacuous: the index meets or exceeds n
    with no valid confidence statement, and the bound evaluates to +inf.
    """

    n: int
    q: float
    epsilon: float
    r_n: float
    q_star: float
    index: int

    @property
    def vacuous(self) -> bool:
        return self.q_star <= 0.0 or self.index > self.n


def _check_bound_args(n: int, q: float, epsilon: float) -> None:
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not (0.0 < q < 1.0):
        raise ValidationError(f"q must lie in (0, 1), got {q}")
    if not (0.0 < epsilon <= 1.0):
        raise ValidationError(f"epsilon must lie in (0, 1], got {epsilon}")


def bound_params(n: int, q: float, epsilon: float) -> QuantileBoundParams:
    """Evaluate r_n, q_star, and the order-statistic index (see QuantileBoundParams)."""
    _check_bound_args(n, q, epsilon)
    r = (1.4 * math.log(math.log(2.1 * n)) + math.log(10.0 / epsilon)) / n
    q_star = q - 1.5 * math.sqrt(q * (1.0 - q) * r) - 0.8 * r
    index = math.floor(n * (1.0 - q_star))
    return QuantileBoundParams(n=int(n), q=float(q), epsilon=float(epsilon),
                               r_n=r, q_star=q_star, index=index)


def quantile_upper_bound(
    sorted_risks: Sequence[float] | np.ndarray, q: float, epsilon: float
) -> float:
    """One-sided upper confidence bound on the q-quantile risk.

    With probability at least 1 - epsilon over the sample, the true
    q-quantile is <= the returned value. The bound is the index-th smallest
    sample value per bound_params; in the vacuous regime (q_star <= 0) it
    is +inf, which keeps the confidence statement trivially true.

    The input must already be sorted ascending; a monotonicity scan
    rejects unsorted input.
    """
    arr = _as_risk_vector(sorted_risks)
    if arr.size > 1 and np.any(np.diff(arr) < 0.0):
        raise ValidationError("risks must be sorted ascending")
    params = bound_params(arr.size, q, epsilon)
    if params.vacuous:
        return math.inf
    return float(arr[params.index - 1])


def quantile_p_value(
    risks: Sequence[float] | np.ndarray,
    q: float,
    alpha: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """p-value for the null "q-quantile risk > alpha" by confidence-bound inversion.

    Returns inf{epsilon in (0, 1] : upper bound at confidence failure
    epsilon drops strictly below alpha}, clamped to 1 when no epsilon
    achieves it. The strict inequality makes the super-uniformity argument
    go through exactly; the non-strict variant differs only on a
    measure-zero set of epsilon values.

    The bound is non-increasing in epsilon (larger epsilon shrinks r_n,
    grows q_star, and lowers the order-statistic index), so the infimum is
    found by bisection on [EPSILON_FLOOR, 1], accurate to within tol.
    """
    if not np.isfinite(alpha) or alpha < 0.0:
        raise ValidationError(f"alpha must be finite and >= 0, got {alpha}")
    if not (tol > 0.0):
        raise ValidationError(f"tol must be > 0, got {tol}")
    arr = np.sort(_as_risk_vector(risks))
    n = arr.size
    _check_bound_args(n, q, 1.0)

    def below(eps: float) -> bool:
        params = bound_params(n, q, eps)
        if params.vacuous:
            return False
        return float(arr[params.index - 1]) < alpha

    lo, hi = EPSILON_FLOOR, 1.0
    if not below(hi):
        return 1.0
    if below(lo):
        return lo
    # invariant: below(hi) is True, below(lo) is False
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi
