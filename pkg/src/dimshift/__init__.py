"""Dimensional-shift contextual bandit simulations.

Four agent models (FRL, WRL, IBL, WIBL) are run on a three-feature bandit
whose rewarded feature-value pair changes mid-episode, under immediate,
delayed (clustered), or counterfactual feedback.
"""

from dimshift.env import (
    ConfigError,
    TaskConfig,
    TargetRule,
    OptionStimulus,
    Trial,
    Outcome,
    ImmediateFeedback,
    DelayedFeedback,
    CounterfactualFeedback,
)
from dimshift.harness import ConditionSpec, ConditionResult, RunConfig, run_grid

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "TaskConfig",
    "TargetRule",
    "OptionStimulus",
    "Trial",
    "Outcome",
    "ImmediateFeedback",
    "DelayedFeedback",
    "CounterfactualFeedback",
    "ConditionSpec",
    "ConditionResult",
    "RunConfig",
    "run_grid",
    "__version__",
]
