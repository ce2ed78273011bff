"""CLI and experiment engine: config, persistence, coverage experiments, reports."""

from .config import (
    ExperimentConfig,
    FileEnv,
    PilotPlan,
    RiskTransform,
    SchedulerEnv,
    SyntheticEnv,
    load_config,
    parse_config,
)
from .fileio import (
    load_result,
    load_risk_matrix,
    load_values_csv,
    read_json,
    write_json,
    write_result,
    write_risk_matrix,
    write_values_csv,
)
from .runner import (
    CoverageReport,
    TrialRecord,
    clopper_pearson,
    prepare_runtime,
    run_coverage,
    run_single,
    write_histogram_csv,
    write_violin_csv,
)

__all__ = [
    "ExperimentConfig",
    "FileEnv",
    "PilotPlan",
    "RiskTransform",
    "SchedulerEnv",
    "SyntheticEnv",
    "load_config",
    "parse_config",
    "load_result",
    "load_risk_matrix",
    "load_values_csv",
    "read_json",
    "write_json",
    "write_result",
    "write_risk_matrix",
    "write_values_csv",
    "CoverageReport",
    "TrialRecord",
    "clopper_pearson",
    "prepare_runtime",
    "run_coverage",
    "run_single",
    "write_histogram_csv",
    "write_violin_csv",
]
