"""Domain types shared across the calibration toolkit.

Everything here is immutable after construction and safe to share
read-only between concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "RiskControlError",
    "ValidationError",
    "SchemaError",
    "ParseError",
    "METHODS",
    "FWER_PROCEDURES",
    "HyperPoint",
    "HyperGrid",
    "RiskMatrix",
    "ControlSpec",
    "CalibrationResult",
    "validate_risk_matrix",
    "derive_seed",
]


class RiskControlError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RiskControlError, ValueError):
    """Data or a specification violates a documented precondition."""


class SchemaError(ValidationError):
    """A config or data file does not match its documented schema."""


class ParseError(RiskControlError, ValueError):
    """A data file could not be parsed; the message names the location."""


METHODS = ("mean", "quantile")
FWER_PROCEDURES = ("bonferroni", "fst")


@dataclass(frozen=True)
class HyperPoint:
    """One candidate hyperparameter vector and its position in the grid."""

    id: int
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.id < 0:
            raise ValidationError(f"point id must be >= 0, got {self.id}")
        if not self.params:
            raise ValidationError("point params must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "HyperPoint":
        return cls(id=d["id"], params=tuple(d["params"]))


@dataclass(frozen=True)
class HyperGrid:
    """Finite ordered candidate set; ids are dense 0..len-1 in grid order."""

    points: tuple[HyperPoint, ...]
    dimension: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "dimension", int(self.dimension))
        if not self.points:
            raise ValidationError("grid must contain at least one point")
        if self.dimension < 1:
            raise ValidationError(f"grid dimension must be >= 1, got {self.dimension}")
        for pos, pt in enumerate(self.points):
            if pt.id != pos:
                raise ValidationError(
                    f"point at position {pos} carries id {pt.id}; ids must equal grid order"
                )
            if len(pt.params) != self.dimension:
                raise ValidationError(
                    f"point {pt.id} has {len(pt.params)} params, grid dimension is {self.dimension}"
                )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(range(len(self.points)))

    def params_array(self) -> np.ndarray:
        """All point parameters stacked as a (len, dimension) array."""
        return np.array([p.params for p in self.points], dtype=np.float64)

    @classmethod
    def from_params(cls, vectors: Iterable[Sequence[float]]) -> "HyperGrid":
        pts = tuple(HyperPoint(i, tuple(v)) for i, v in enumerate(vectors))
        if not pts:
            raise ValidationError("grid must contain at least one point")
        return cls(points=pts, dimension=len(pts[0].params))

    def to_dict(self) -> dict[str, Any]:
        return {"dimension": self.dimension, "points": [p.to_dict() for p in self.points]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "HyperGrid":
        return cls(
            points=tuple(HyperPoint.from_dict(p) for p in d["points"]),
            dimension=d["dimension"],
        )


@dataclass(frozen=True, eq=False)
class RiskMatrix:
    """Per-episode risk evaluations: values[i, j] = risk of grid point j on episode i.

    ``bounded_unit`` declares that every value is guaranteed to lie in [0, 1];
    the mean-risk calibration path requires it, the quantile path does not.
    """

    values: np.ndarray
    bounded_unit: bool

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"risk matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"risk matrix must be non-empty, got shape {arr.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "bounded_unit", bool(self.bounded_unit))

    @property
    def n(self) -> int:
        """Episode count."""
        return int(self.values.shape[0])

    @property
    def n_points(self) -> int:
        return int(self.values.shape[1])

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RiskMatrix):
            return NotImplemented
        return self.bounded_unit == other.bounded_unit and np.array_equal(
            self.values, other.values
        )

    def to_dict(self) -> dict[str, Any]:
        return {"values": self.values.tolist(), "bounded_unit": self.bounded_unit}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RiskMatrix":
        return cls(values=np.array(d["values"], dtype=np.float64), bounded_unit=d["bounded_unit"])


@dataclass(frozen=True)
class ControlSpec:
    """Target of a calibration run.

    alpha is the risk level to certify against (same units as the risk),
    delta the probability with which the certified set may fail as a whole,
    and q the outage rate of the quantile to control (quantile method only).
    """

    alpha: float
    delta: float
    method: str
    q: float | None = None
    fwer: str = "bonferroni"
    ordering: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "delta", float(self.delta))
        if self.q is not None:
            object.__setattr__(self, "q", float(self.q))
        if self.ordering is not None:
            object.__setattr__(self, "ordering", tuple(int(i) for i in self.ordering))
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.fwer not in FWER_PROCEDURES:
            raise ValidationError(f"fwer must be one of {FWER_PROCEDURES}, got {self.fwer!r}")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValidationError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (0.0 < self.delta < 1.0):
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.method == "quantile":
            if self.q is None:
                raise ValidationError("method 'quantile' requires q")
            if not (0.0 < self.q < 1.0):
                raise ValidationError(f"q must lie in (0, 1), got {self.q}")
        elif self.q is not None and not (0.0 < self.q < 1.0):
            raise ValidationError(f"q must lie in (0, 1), got {self.q}")
        if self.ordering is not None and len(set(self.ordering)) != len(self.ordering):
            raise ValidationError("ordering contains duplicate ids")

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "delta": self.delta,
            "method": self.method,
            "q": self.q,
            "fwer": self.fwer,
            "ordering": None if self.ordering is None else list(self.ordering),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ControlSpec":
        return cls(
            alpha=d["alpha"],
            delta=d["delta"],
            method=d["method"],
            q=d.get("q"),
            fwer=d.get("fwer", "bonferroni"),
            ordering=None if d.get("ordering") is None else tuple(d["ordering"]),
        )


@dataclass(frozen=True)
class CalibrationResult:
    """Output of one calibration run, with full provenance."""

    p_values: tuple[float, ...]
    certified: tuple[int, ...]
    selected: int | None
    spec: ControlSpec
    n: int
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "certified", tuple(int(i) for i in self.certified))
        if self.selected is not None:
            object.__setattr__(self, "selected", int(self.selected))
        for p in self.p_values:
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"p-value {p} outside [0, 1]")
        if len(set(self.certified)) != len(self.certified):
            raise ValidationError("certified set contains duplicate ids")
        for i in self.certified:
            if not (0 <= i < len(self.p_values)):
                raise ValidationError(f"certified id {i} outside grid range")
        if self.selected is not None and self.selected not in self.certified:
            raise ValidationError(f"selected id {self.selected} is not certified")
        if self.n < 1:
            raise ValidationError(f"episode count must be >= 1, got {self.n}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "p_values": list(self.p_values),
            "certified": list(self.certified),
            "selected": self.selected,
            "spec": self.spec.to_dict(),
            "n": self.n,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CalibrationResult":
        return cls(
            p_values=tuple(d["p_values"]),
            certified=tuple(d["certified"]),
            selected=d["selected"],
            spec=ControlSpec.from_dict(d["spec"]),
            n=d["n"],
            seed=d.get("seed"),
        )


def validate_risk_matrix(m: RiskMatrix, g: HyperGrid) -> None:
    """Check a risk matrix against its grid; raise ValidationError on the first defect.

    Verifies column count, finiteness, nonnegativity, and consistency of the
    bounded_unit flag with the actual values.
    """
    if m.n_points != len(g):
        raise ValidationError(
            f"dimension mismatch: matrix has {m.n_points} columns, grid has {len(g)} points"
        )
    finite = np.isfinite(m.values)
    if not finite.all():
        i, j = np.argwhere(~finite)[0]
        raise ValidationError(f"non-finite value at row {i}, column {j}")
    neg = m.values < 0.0
    if neg.any():
        i, j = np.argwhere(neg)[0]
        raise ValidationError(
            f"negative risk value {m.values[i, j]} at row {i}, column {j}"
        )
    if m.bounded_unit:
        over = m.values > 1.0
        if over.any():
            i, j = np.argwhere(over)[0]
            raise ValidationError(
                f"bound violation: bounded_unit=True but value {m.values[i, j]} "
                f"at row {i}, column {j} exceeds 1"
            )


def derive_seed(master_seed: int, *path: int) -> int:
    """Derive a child seed from a master seed and an integer path.

    Splitting rule: ``numpy.random.SeedSequence(master_seed, spawn_key=path)``
    reduced to a single uint64. Identical inputs give identical children on
    every platform, and distinct paths give statistically independent
    streams, so derived work can run in any order or concurrently.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
