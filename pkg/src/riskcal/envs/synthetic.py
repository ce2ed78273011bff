"""Synthetic risk families with closed-form mean and quantile ground truth.

These exist to validate the calibration guarantees: every family exposes
its true per-point mean risk and q-quantile risk analytically, so Monte
Carlo experiments can check certified sets against exact truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np
from scipy import stats

from ..core import HyperGrid, RiskMatrix, ValidationError

__all__ = ["SyntheticFamily", "sample_risk_matrix", "true_functionals"]

KINDS = ("uniform_scale", "beta", "bernoulli_mixture")
_ARITY = {"uniform_scale": 1, "beta": 2, "bernoulli_mixture": 3}


@dataclass(frozen=True)
class SyntheticFamily:
    """Per-grid-point risk distributions of one parametric kind.

    uniform_scale:      params (c,), risk ~ Uniform(0, c), c > 0
    beta:               params (a, b), risk ~ Beta(a, b)
    bernoulli_mixture:  params (p, lo, hi), risk = hi w.p. p else lo
    """

    kind: str
    point_params: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        pts = tuple(tuple(float(v) for v in p) for p in self.point_params)
        object.__setattr__(self, "point_params", pts)
        if not pts:
            raise ValidationError("family must cover at least one grid point")
        arity = _ARITY[self.kind]
        for j, p in enumerate(pts):
            if len(p) != arity:
                raise ValidationError(
                    f"{self.kind} expects {arity} parameters per point, "
                    f"point {j} has {len(p)}"
                )
            if self.kind == "uniform_scale":
                (c,) = p
                if not (c > 0) or not np.isfinite(c):
                    raise ValidationError(f"scale at point {j} must be > 0, got {c}")
            elif self.kind == "beta":
                a, b = p
                if not (a > 0 and b > 0):
                    raise ValidationError(f"beta shapes at point {j} must be > 0, got {p}")
            else:
                prob, lo, hi = p
                if not (0.0 <= prob <= 1.0):
                    raise ValidationError(f"mixture prob at point {j} must lie in [0, 1]")
                if not (0.0 <= lo <= hi):
                    raise ValidationError(
                        f"mixture levels at point {j} must satisfy 0 <= lo <= hi, got {p}"
                    )

    def __len__(self) -> int:
        return len(self.point_params)

    def grid(self) -> HyperGrid:
        """Grid whose point parameters are the family parameters themselves."""
        return HyperGrid.from_params(self.point_params)

    @property
    def unit_bounded(self) -> bool:
        """True when the support of every point distribution lies in [0, 1]."""
        if self.kind == "beta":
            return True
        if self.kind == "uniform_scale":
            return all(c <= 1.0 for (c,) in self.point_params)
        return all(hi <= 1.0 for (_, _, hi) in self.point_params)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "point_params": [list(p) for p in self.point_params]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SyntheticFamily":
        return cls(kind=d["kind"], point_params=tuple(tuple(p) for p in d["point_params"]))


def _check_family_grid(fam: SyntheticFamily, g: HyperGrid) -> None:
    if len(fam) != len(g):
        raise ValidationError(
            f"family covers {len(fam)} points, grid has {len(g)}"
        )


def sample_risk_matrix(
    fam: SyntheticFamily, g: HyperGrid, n: int, seed: int
) -> RiskMatrix:
    """Draw n i.i.d. risk values per grid point; deterministic given seed."""
    _check_family_grid(fam, g)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    m = len(fam)
    params = np.array(fam.point_params, dtype=np.float64)
    if fam.kind == "uniform_scale":
        values = rng.random((n, m)) * params[:, 0][None, :]
    elif fam.kind == "beta":
        values = rng.beta(params[:, 0][None, :], params[:, 1][None, :], size=(n, m))
    else:
        u = rng.random((n, m))
        values = np.where(u < params[:, 0][None, :], params[:, 2][None, :], params[:, 1][None, :])
    return RiskMatrix(values=values, bounded_unit=fam.unit_bounded)


def true_functionals(
    fam: SyntheticFamily, g: HyperGrid, q: float
) -> tuple[tuple[float, float], ...]:
    """Closed-form (mean risk, q-quantile risk) per grid point.

    The q-quantile is the smallest r with P[risk <= r] >= 1 - q:
    uniform_scale gives (1-q)*c, beta the inverse CDF at 1-q, and the
    two-point mixture hi when p > q else lo.
    """
    _check_family_grid(fam, g)
    if not (0.0 < q < 1.0):
        raise ValidationError(f"q must lie in (0, 1), got {q}")
    out: list[tuple[float, float]] = []
    for p in fam.point_params:
        if fam.kind == "uniform_scale":
            (c,) = p
            out.append((c / 2.0, (1.0 - q) * c))
        elif fam.kind == "beta":
            a, b = p
            out.append((a / (a + b), float(stats.beta.ppf(1.0 - q, a, b))))
        else:
            prob, lo, hi = p
            mean = lo + prob * (hi - lo)
            out.append((mean, hi if prob > q else lo))
    return tuple(out)
