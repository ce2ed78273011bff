"""Risk-generating environments: analytic synthetic families and a toy scheduler."""

from .scheduler import (
    EpisodeTrace,
    SchedulerConfig,
    build_multiplier_grid,
    episode_risk,
    risk_reward_matrix,
    run_episode,
)
from .synthetic import SyntheticFamily, sample_risk_matrix, true_functionals

__all__ = [
    "SyntheticFamily",
    "sample_risk_matrix",
    "true_functionals",
    "SchedulerConfig",
    "EpisodeTrace",
    "run_episode",
    "episode_risk",
    "risk_reward_matrix",
    "build_multiplier_grid",
]
