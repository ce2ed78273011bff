"""Experiment configuration: JSON schema with fail-fast unknown-key rejection.

Silent misconfiguration would invalidate the statistical guarantees, so
any unrecognized key at any level is an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from ..core import ControlSpec, SchemaError
from ..envs import SchedulerConfig, SyntheticFamily
from .fileio import read_json

__all__ = [
    "RiskTransform",
    "PilotPlan",
    "SyntheticEnv",
    "SchedulerEnv",
    "FileEnv",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

SYNTHETIC_KINDS = ("uniform_scale", "beta", "bernoulli_mixture")


def _take(d: Mapping[str, Any], where: str, required: set[str], optional: set[str]) -> None:
    unknown = set(d) - required - optional
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise SchemaError(f"{where}: missing keys {sorted(missing)}")


@dataclass(frozen=True)
class RiskTransform:
    """Map raw risks into [0, 1] as min(r, scale)/scale for mean-risk control.

    The mean guarantee then applies to the clipped, rescaled risk; the
    target level is transformed the same way.
    """

    kind: str
    scale: float

    def __post_init__(self) -> None:
        if self.kind != "clip_scale":
            raise SchemaError(f"risk_transform.kind must be 'clip_scale', got {self.kind!r}")
        if not (self.scale > 0):
            raise SchemaError("risk_transform.scale must be > 0")

    def apply_values(self, values):
        import numpy as np

        return np.minimum(values, self.scale) / self.scale

    def apply_level(self, alpha: float) -> float:
        return min(alpha, self.scale) / self.scale

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RiskTransform":
        _take(d, "risk_transform", {"kind", "scale"}, set())
        return cls(kind=d["kind"], scale=float(d["scale"]))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class PilotPlan:
    """Pre-calibration pilot run used for a-priori choices.

    alpha_from='base_median' sets the target level to the median risk of
    the base grid point on the pilot episodes; ordering_from ranks
    candidates by their pilot quantile or mean for fixed sequence testing.
    The pilot uses its own seed stream, so these choices stay independent
    of the calibration data.
    """

    episodes: int
    alpha_from: str | None = None
    ordering_from: str | None = None

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise SchemaError("pilot.episodes must be >= 1")
        if self.alpha_from not in (None, "base_median"):
            raise SchemaError(f"pilot.alpha_from must be 'base_median' or null, got {self.alpha_from!r}")
        if self.ordering_from not in (None, "quantile", "mean"):
            raise SchemaError(
                f"pilot.ordering_from must be 'quantile', 'mean', or null, got {self.ordering_from!r}"
            )

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PilotPlan":
        _take(d, "pilot", {"episodes"}, {"alpha_from", "ordering_from"})
        return cls(
            episodes=int(d["episodes"]),
            alpha_from=d.get("alpha_from"),
            ordering_from=d.get("ordering_from"),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "episodes": self.episodes,
            "alpha_from": self.alpha_from,
            "ordering_from": self.ordering_from,
        }


@dataclass(frozen=True)
class SyntheticEnv:
    family: SyntheticFamily

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.family.kind, "params": [list(p) for p in self.family.point_params]}


@dataclass(frozen=True)
class SchedulerEnv:
    cfg: SchedulerConfig
    base: tuple[float, ...]
    multipliers: tuple[float, ...]
    pilot: PilotPlan | None = None
    holdout_episodes: int = 500

    def __post_init__(self) -> None:
        if len(self.base) != 4:
            raise SchemaError("scheduler env base must have 4 entries")
        if not self.multipliers:
            raise SchemaError("scheduler env multipliers must be non-empty")
        if self.holdout_episodes < 1:
            raise SchemaError("holdout_episodes must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"type": "scheduler", "base": list(self.base),
                             "multipliers": list(self.multipliers),
                             "holdout_episodes": self.holdout_episodes}
        if self.pilot is not None:
            d["pilot"] = self.pilot.to_dict()
        d.update(self.cfg.to_dict())
        return d


@dataclass(frozen=True)
class FileEnv:
    risk_csv: str
    manifest: str
    rewards_csv: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"type": "file", "risk_csv": self.risk_csv, "manifest": self.manifest,
                "rewards_csv": self.rewards_csv}


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ControlSpec
    env: SyntheticEnv | SchedulerEnv | FileEnv
    n_cal: int | None
    n_test: int = 0
    trials: int = 1
    seed: int = 0
    output_dir: str | None = None
    workers: int = 1
    risk_transform: RiskTransform | None = None

    def __post_init__(self) -> None:
        if self.n_cal is None and not isinstance(self.env, FileEnv):
            raise SchemaError("n_cal is required unless env.type is 'file'")
        if self.n_cal is not None and self.n_cal < 1:
            raise SchemaError("n_cal must be >= 1")
        if self.trials < 1:
            raise SchemaError("trials must be >= 1")
        if self.n_test < 0:
            raise SchemaError("n_test must be >= 0")
        if self.workers < 1:
            raise SchemaError("workers must be >= 1")
        if self.risk_transform is not None:
            if self.spec.method != "mean":
                raise SchemaError("risk_transform applies to method 'mean' only")
            if isinstance(self.env, SyntheticEnv):
                raise SchemaError("risk_transform requires a scheduler or file env")

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "env": self.env.to_dict(),
            "n_cal": self.n_cal,
            "n_test": self.n_test,
            "trials": self.trials,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "workers": self.workers,
            "risk_transform": None if self.risk_transform is None else self.risk_transform.to_dict(),
        }


_SPEC_KEYS_REQ = {"alpha", "delta", "method"}
_SPEC_KEYS_OPT = {"q", "fwer", "ordering"}
_TOP_REQ = {"spec", "env"}
_TOP_OPT = {"n_cal", "n_test", "trials", "seed", "output_dir", "workers", "risk_transform"}
_SCHED_REQ = {"type", "base", "multipliers"}
_SCHED_OPT = {"pilot", "holdout_episodes"} | set(SchedulerConfig().to_dict())


def _parse_spec(d: Mapping[str, Any]) -> ControlSpec:
    _take(d, "spec", _SPEC_KEYS_REQ, _SPEC_KEYS_OPT)
    return ControlSpec.from_dict(d)


def _parse_env(d: Mapping[str, Any]):
    if "type" not in d:
        raise SchemaError("env: missing key 'type'")
    kind = d["type"]
    if kind in SYNTHETIC_KINDS:
        _take(d, "env", {"type", "params"}, set())
        fam = SyntheticFamily(kind=kind, point_params=tuple(tuple(p) for p in d["params"]))
        return SyntheticEnv(family=fam)
    if kind == "scheduler":
        _take(d, "env", _SCHED_REQ, _SCHED_OPT)
        cfg_keys = set(SchedulerConfig().to_dict())
        cfg_kwargs = {k: (tuple(v) if isinstance(v, list) else v)
                      for k, v in d.items() if k in cfg_keys}
        pilot = PilotPlan.from_dict(d["pilot"]) if d.get("pilot") is not None else None
        return SchedulerEnv(
            cfg=SchedulerConfig(**cfg_kwargs),
            base=tuple(float(x) for x in d["base"]),
            multipliers=tuple(float(x) for x in d["multipliers"]),
            pilot=pilot,
            holdout_episodes=int(d.get("holdout_episodes", 500)),
        )
    if kind == "file":
        _take(d, "env", {"type", "risk_csv", "manifest"}, {"rewards_csv"})
        return FileEnv(risk_csv=d["risk_csv"], manifest=d["manifest"],
                       rewards_csv=d.get("rewards_csv"))
    raise SchemaError(f"env.type must be one of {SYNTHETIC_KINDS + ('scheduler', 'file')}, got {kind!r}")


def parse_config(d: Mapping[str, Any]) -> ExperimentConfig:
    _take(d, "config", _TOP_REQ, _TOP_OPT)
    transform = d.get("risk_transform")
    return ExperimentConfig(
        spec=_parse_spec(d["spec"]),
        env=_parse_env(d["env"]),
        n_cal=None if d.get("n_cal") is None else int(d["n_cal"]),
        n_test=int(d.get("n_test", 0)),
        trials=int(d.get("trials", 1)),
        seed=int(d.get("seed", 0)),
        output_dir=d.get("output_dir"),
        workers=int(d.get("workers", 1)),
        risk_transform=None if transform is None else RiskTransform.from_dict(transform),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(read_json(path))
