"""riskcal: distribution-free certification of hyperparameter grids.

Given per-episode risk evaluations of a finite candidate grid, the
calibration drivers return the subset of candidates certified to keep
either the mean risk or a chosen quantile of the risk below a target
level, with probability at least 1 - delta over the calibration draw.
"""

from .calibrate import calibrate, calibrate_mean_risk, calibrate_quantile_risk, select_best
from .core import (
    CalibrationResult,
    ControlSpec,
    HyperGrid,
    HyperPoint,
    ParseError,
    RiskControlError,
    RiskMatrix,
    SchemaError,
    ValidationError,
    derive_seed,
    validate_risk_matrix,
)
from .fwer import FwerOutcome, bonferroni, fixed_sequence_test
from .pvalues import (
    QuantileBoundParams,
    bound_params,
    empirical_mean_risk,
    empirical_quantile,
    hoeffding_p_value,
    quantile_p_value,
    quantile_upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ControlSpec",
    "FwerOutcome",
    "HyperGrid",
    "HyperPoint",
    "ParseError",
    "QuantileBoundParams",
    "RiskControlError",
    "RiskMatrix",
    "SchemaError",
    "ValidationError",
    "bonferroni",
    "bound_params",
    "calibrate",
    "calibrate_mean_risk",
    "calibrate_quantile_risk",
    "derive_seed",
    "empirical_mean_risk",
    "empirical_quantile",
    "fixed_sequence_test",
    "hoeffding_p_value",
    "quantile_p_value",
    "quantile_upper_bound",
    "select_best",
    "validate_risk_matrix",
]
