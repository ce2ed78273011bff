"""Experiment engine: single calibrations, repeated-trial coverage, reports.

Seed discipline: every consumer of randomness derives its seed from the
master seed through `derive_seed(master, stream, *indices)` with a fixed
stream id per purpose (pilot=1, holdout=2, calibration trial=3, test=4).
Trials are therefore independent, order-insensitive, and reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats

from ..calibrate import calibrate
from ..core import (
    CalibrationResult,
    ControlSpec,
    HyperGrid,
    HyperPoint,
    RiskMatrix,
    SchemaError,
    ValidationError,
    derive_seed,
)
from ..envs import (
    build_multiplier_grid,
    risk_reward_matrix,
    sample_risk_matrix,
    true_functionals,
)
from ..pvalues import empirical_quantile
from .config import ExperimentConfig, FileEnv, SchedulerEnv, SyntheticEnv
from .fileio import load_risk_matrix, load_values_csv

__all__ = [
    "STREAM_PILOT",
    "STREAM_HOLDOUT",
    "STREAM_TRIAL",
    "STREAM_TEST",
    "TrialRecord",
    "CoverageReport",
    "clopper_pearson",
    "prepare_runtime",
    "run_single",
    "run_coverage",
    "write_histogram_csv",
    "write_violin_csv",
]

STREAM_PILOT = 1
STREAM_HOLDOUT = 2
STREAM_TRIAL = 3
STREAM_TEST = 4


def clopper_pearson(k: int, n: int, conf: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for k successes in n trials."""
    if not (0 <= k <= n) or n < 1:
        raise ValidationError(f"need 0 <= k <= n, n >= 1; got k={k}, n={n}")
    tail = (1.0 - conf) / 2.0
    lo = 0.0 if k == 0 else float(stats.beta.ppf(tail, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1.0 - tail, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class TrialRecord:
    """One calibration trial: who was certified, how good they truly are."""

    trial: int
    certified: tuple[int, ...]
    selected: int | None
    certified_truth: tuple[float, ...]
    violation: bool
    selected_mean: float | None
    selected_quantile: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "trial": self.trial,
            "certified": list(self.certified),
            "selected": self.selected,
            "certified_truth": list(self.certified_truth),
            "violation": self.violation,
            "selected_mean": self.selected_mean,
            "selected_quantile": self.selected_quantile,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TrialRecord":
        return cls(
            trial=d["trial"],
            certified=tuple(d["certified"]),
            selected=d["selected"],
            certified_truth=tuple(d["certified_truth"]),
            violation=d["violation"],
            selected_mean=d["selected_mean"],
            selected_quantile=d["selected_quantile"],
        )


@dataclass(frozen=True)
class CoverageReport:
    """Aggregate of repeated independent calibrations against ground truth.

    `spec` is the control specification actually used by the calibrations
    (after pilot-based alpha/ordering resolution and any risk transform).
    A violation means at least one certified id whose true functional
    exceeds the target level. Wall-clock numbers are informational and
    excluded from the reproducibility contract.
    """

    spec: ControlSpec
    n_cal: int
    trials: int
    seed: int
    functional_source: str
    violations: int
    violation_rate: float
    ci95: tuple[float, float]
    records: tuple[TrialRecord, ...]
    wall_clock: dict[str, float]

    def __post_init__(self) -> None:
        if len(self.records) != self.trials:
            raise ValidationError(
                f"record count {len(self.records)} != trials {self.trials}"
            )
        if not (0.0 <= self.violation_rate <= 1.0):
            raise ValidationError(f"violation rate {self.violation_rate} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "n_cal": self.n_cal,
            "trials": self.trials,
            "seed": self.seed,
            "functional_source": self.functional_source,
            "violations": self.violations,
            "violation_rate": self.violation_rate,
            "ci95": list(self.ci95),
            "records": [r.to_dict() for r in self.records],
            "wall_clock": dict(self.wall_clock),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CoverageReport":
        return cls(
            spec=ControlSpec.from_dict(d["spec"]),
            n_cal=d["n_cal"],
            trials=d["trials"],
            seed=d["seed"],
            functional_source=d["functional_source"],
            violations=d["violations"],
            violation_rate=d["violation_rate"],
            ci95=tuple(d["ci95"]),
            records=tuple(TrialRecord.from_dict(r) for r in d["records"]),
            wall_clock=dict(d["wall_clock"]),
        )


class _SyntheticRuntime:
    functional_source = "analytic"

    def __init__(self, config: ExperimentConfig, env: SyntheticEnv):
        self.config = config
        self.family = env.family
        self.grid = env.family.grid()
        self.spec = config.spec

    def cal_data(self, t: int) -> tuple[RiskMatrix, np.ndarray | None]:
        seed = derive_seed(self.config.seed, STREAM_TRIAL, t)
        return sample_risk_matrix(self.family, self.grid, self.config.n_cal, seed), None

    def truth_vector(self, spec: ControlSpec) -> np.ndarray:
        q = spec.q if spec.q is not None else 0.5
        pairs = true_functionals(self.family, self.grid, q)
        col = 0 if spec.method == "mean" else 1
        return np.array([p[col] for p in pairs])

    def selected_estimates(self, t: int, ids: Sequence[int]) -> dict[int, tuple[float, float | None]]:
        q = self.spec.q
        pairs = true_functionals(self.family, self.grid, q if q is not None else 0.5)
        return {i: (pairs[i][0], pairs[i][1] if q is not None else None) for i in ids}


class _SchedulerRuntime:
    functional_source = "holdout"

    def __init__(self, config: ExperimentConfig, env: SchedulerEnv):
        self.config = config
        self.env = env
        self.grid = build_multiplier_grid(HyperPoint(0, env.base), env.multipliers)
        self.spec = self._resolve_spec(config.spec)
        self._holdout: RiskMatrix | None = None

    def _pilot_matrix(self) -> RiskMatrix:
        seeds = [derive_seed(self.config.seed, STREAM_PILOT, i)
                 for i in range(self.env.pilot.episodes)]
        m, _ = risk_reward_matrix(self.env.cfg, self.grid, seeds, workers=self.config.workers)
        return m

    def _resolve_spec(self, spec: ControlSpec) -> ControlSpec:
        pilot = self.env.pilot
        if pilot is None or (pilot.alpha_from is None and pilot.ordering_from is None):
            return spec
        m = self._pilot_matrix()
        changes: dict[str, Any] = {}
        if pilot.alpha_from == "base_median":
            base_ids = [p.id for p in self.grid.points if p.params == self.env.base]
            if not base_ids:
                raise SchemaError(
                    "pilot.alpha_from='base_median' requires multiplier 1.0 so the "
                    "base point itself is in the grid"
                )
            changes["alpha"] = empirical_quantile(m.values[:, base_ids[0]], 0.5)
        if pilot.ordering_from is not None:
            if pilot.ordering_from == "quantile":
                if spec.q is None:
                    raise SchemaError("pilot.ordering_from='quantile' requires spec.q")
                key = np.array([empirical_quantile(m.values[:, j], spec.q)
                                for j in range(len(self.grid))])
            else:
                key = m.values.mean(axis=0)
            changes["ordering"] = tuple(int(j) for j in np.argsort(key, kind="stable"))
        return replace(spec, **changes)

    def cal_data(self, t: int) -> tuple[RiskMatrix, np.ndarray]:
        seeds = [derive_seed(self.config.seed, STREAM_TRIAL, t, i)
                 for i in range(self.config.n_cal)]
        return risk_reward_matrix(self.env.cfg, self.grid, seeds, workers=self.config.workers)

    def _holdout_matrix(self) -> RiskMatrix:
        if self._holdout is None:
            seeds = [derive_seed(self.config.seed, STREAM_HOLDOUT, i)
                     for i in range(self.env.holdout_episodes)]
            self._holdout, _ = risk_reward_matrix(
                self.env.cfg, self.grid, seeds, workers=self.config.workers
            )
        return self._holdout

    def truth_vector(self, spec: ControlSpec) -> np.ndarray:
        m = self._holdout_matrix()
        if spec.method == "mean":
            transform = self.config.risk_transform
            values = transform.apply_values(m.values) if transform is not None else m.values
            return values.mean(axis=0)
        return np.array([empirical_quantile(m.values[:, j], spec.q)
                         for j in range(len(self.grid))])

    def selected_estimates(self, t: int, ids: Sequence[int]) -> dict[int, tuple[float, float | None]]:
        """Fresh test-episode estimates of the selected candidates, raw units."""
        n_test = self.config.n_test
        if n_test < 1:
            m = self._holdout_matrix()
            cols = {i: m.values[:, i] for i in ids}
        else:
            seeds = [derive_seed(self.config.seed, STREAM_TEST, t, i) for i in range(n_test)]
            cols = {}
            for i in ids:
                sub = HyperGrid.from_params([self.grid.points[i].params])
                sub_m, _ = risk_reward_matrix(self.env.cfg, sub, seeds,
                                              workers=self.config.workers)
                cols[i] = sub_m.values[:, 0]
        q = self.spec.q
        return {
            i: (float(col.mean()), empirical_quantile(col, q) if q is not None else None)
            for i, col in cols.items()
        }


class _FileRuntime:
    functional_source = "file"

    def __init__(self, config: ExperimentConfig, env: FileEnv):
        self.config = config
        m, grid, rewards_ref = load_risk_matrix(env.risk_csv, env.manifest)
        rewards = None
        ref = env.rewards_csv or rewards_ref
        if ref is not None:
            values, ids = load_values_csv(ref)
            if ids != list(grid.ids) or values.shape != m.values.shape:
                raise SchemaError(f"{ref}: rewards shape does not match risk matrix")
            rewards = values
        self.matrix = m
        self.rewards = rewards
        self.grid = grid
        self.spec = config.spec

    def cal_data(self, t: int) -> tuple[RiskMatrix, np.ndarray | None]:
        return self.matrix, self.rewards


def prepare_runtime(config: ExperimentConfig):
    env = config.env
    if isinstance(env, SyntheticEnv):
        if config.spec.method == "mean" and not env.family.unit_bounded:
            raise SchemaError(
                "method 'mean' requires a unit-bounded family (Hoeffding p-values)"
            )
        return _SyntheticRuntime(config, env)
    if isinstance(env, SchedulerEnv):
        if config.spec.method == "mean" and config.risk_transform is None:
            raise SchemaError(
                "method 'mean' on scheduler risks (unbounded delays) requires a "
                "risk_transform to map them into [0, 1]"
            )
        return _SchedulerRuntime(config, env)
    if isinstance(env, FileEnv):
        return _FileRuntime(config, env)
    raise SchemaError(f"unsupported env {type(env).__name__}")


def _transformed(config: ExperimentConfig, m: RiskMatrix, spec: ControlSpec):
    """Apply the clip-and-rescale transform for mean-risk control, if configured."""
    transform = config.risk_transform
    if transform is None or spec.method != "mean":
        return m, spec
    m_t = RiskMatrix(values=transform.apply_values(m.values), bounded_unit=True)
    return m_t, replace(spec, alpha=transform.apply_level(spec.alpha))


def run_single(config: ExperimentConfig):
    """One calibration (the trial-0 data stream); returns (result, runtime)."""
    runtime = prepare_runtime(config)
    m, rewards = runtime.cal_data(0)
    m_t, spec_t = _transformed(config, m, runtime.spec)
    result = calibrate(m_t, runtime.grid, spec_t, rewards=rewards, seed=config.seed)
    return result, runtime


def run_coverage(config: ExperimentConfig) -> CoverageReport:
    """T independent calibrations; certified sets checked against ground truth."""
    if isinstance(config.env, FileEnv):
        raise SchemaError("coverage requires a synthetic or scheduler env (ground truth)")
    runtime = prepare_runtime(config)
    t0 = time.perf_counter()
    _, spec_probe = _transformed(config, _probe_matrix(runtime), runtime.spec)
    truth = runtime.truth_vector(spec_probe)
    records: list[TrialRecord] = []
    violations = 0
    for t in range(config.trials):
        m, rewards = runtime.cal_data(t)
        m_t, spec_t = _transformed(config, m, runtime.spec)
        res = calibrate(m_t, runtime.grid, spec_t, rewards=rewards,
                        seed=derive_seed(config.seed, STREAM_TRIAL, t))
        cert_truth = tuple(float(truth[i]) for i in res.certified)
        violation = any(v > spec_t.alpha for v in cert_truth)
        violations += violation
        sel_mean = sel_quant = None
        if res.selected is not None:
            est = runtime.selected_estimates(t, [res.selected])
            sel_mean, sel_quant = est[res.selected]
        records.append(TrialRecord(
            trial=t,
            certified=res.certified,
            selected=res.selected,
            certified_truth=cert_truth,
            violation=bool(violation),
            selected_mean=sel_mean,
            selected_quantile=sel_quant,
        ))
    total = time.perf_counter() - t0
    _, spec_used = _transformed(config, _probe_matrix(runtime), runtime.spec)
    return CoverageReport(
        spec=spec_used,
        n_cal=config.n_cal,
        trials=config.trials,
        seed=config.seed,
        functional_source=runtime.functional_source,
        violations=violations,
        violation_rate=violations / config.trials,
        ci95=clopper_pearson(violations, config.trials),
        records=tuple(records),
        wall_clock={"total_s": total, "per_trial_s": total / config.trials},
    )


def _probe_matrix(runtime) -> RiskMatrix:
    """A 1x|grid| placeholder so _transformed can resolve the spec without data."""
    return RiskMatrix(values=np.zeros((1, len(runtime.grid))), bounded_unit=False)


def write_histogram_csv(
    out_path: str | Path,
    results: Mapping[str, CalibrationResult],
    test_matrix: RiskMatrix,
    test_grid: HyperGrid,
    alpha: float,
    q: float,
) -> None:
    """Per-test-episode risks of each method's selected candidate, plus markers.

    Marker lines carry each method's empirical (1-q)-quantile of its test
    risks; plotting tools must draw these values verbatim.
    """
    lines = ["# columns: method,episode,risk", f"# alpha: {alpha!r}", f"# q: {q!r}"]
    data_rows: list[str] = []
    for method in ("mean", "quantile"):
        res = results.get(method)
        if res is None or res.selected is None:
            continue
        col = test_matrix.values[:, res.selected]
        marker = empirical_quantile(col, q)
        lines.append(f"# marker method={method} value={marker!r}")
        data_rows.extend(f"{method},{i},{float(v)!r}" for i, v in enumerate(col))
    lines.append("method,episode,risk")
    lines.extend(data_rows)
    Path(out_path).write_text("\n".join(lines) + "\n")


def write_violin_csv(
    out_path: str | Path,
    reports: Sequence[CoverageReport],
    alpha: float,
) -> None:
    """Per-trial selected-candidate functionals, one row per (method, trial)."""
    lines = ["# columns: method,trial,mean_risk,quantile_risk", f"# alpha: {alpha!r}"]
    lines.append("method,trial,mean_risk,quantile_risk")
    for report in reports:
        method = report.spec.method
        for rec in report.records:
            mean_cell = "" if rec.selected_mean is None else repr(rec.selected_mean)
            quant_cell = "" if rec.selected_quantile is None else repr(rec.selected_quantile)
            lines.append(f"{method},{rec.trial},{mean_cell},{quant_cell}")
    Path(out_path).write_text("\n".join(lines) + "\n")
