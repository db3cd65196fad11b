"""Dimensional-shift contextual bandit environment.

Each trial presents ``num_options`` options, one value per feature dimension.
One (dimension, value) pair is the target; the option carrying it pays off
with probability ``p_high``, the others with ``p_low``. Halfway through the
episode the target moves to a disjoint pool of previously unseen values,
either within the same dimension (intra) or to another dimension (extra).
Outcomes for all options are sampled every trial; the feedback regime only
controls what the agent gets to see.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration or an operation used outside its contract."""


ShiftKind = str  # "intra" | "extra"
FeedbackKind = str  # "immediate" | "delayed" | "counterfactual"

SHIFT_KINDS = ("intra", "extra")
FEEDBACK_KINDS = ("immediate", "delayed", "counterfactual")


@dataclass(frozen=True)
class TaskConfig:
    num_dimensions: int = 3
    values_per_dimension: int = 6
    num_options: int = 3
    p_high: float = 0.75
    p_low: float = 0.25
    outcome_noise_sd: float = 0.1
    trials_total: int = 100
    shift_trial: int = 50
    cluster_size: int = 10
    shift_kind: ShiftKind = "intra"
    feedback_kind: FeedbackKind = "immediate"

    def __post_init__(self) -> None:
        if not (0 <= self.p_low < self.p_high <= 1):
            raise ConfigError(
                f"need 0 <= p_low < p_high <= 1, got p_low={self.p_low}, p_high={self.p_high}"
            )
        if self.num_options * 2 > self.values_per_dimension:
            raise ConfigError(
                "num_options must be at most values_per_dimension / 2 so that the "
                "pre- and post-shift value pools are disjoint"
            )
        if not (1 <= self.shift_trial < self.trials_total):
            raise ConfigError(
                f"need 1 <= shift_trial < trials_total, got {self.shift_trial}, {self.trials_total}"
            )
        if self.outcome_noise_sd < 0:
            raise ConfigError("outcome_noise_sd must be >= 0")
        if self.shift_kind not in SHIFT_KINDS:
            raise ConfigError(f"unknown shift_kind {self.shift_kind!r}")
        if self.feedback_kind not in FEEDBACK_KINDS:
            raise ConfigError(f"unknown feedback_kind {self.feedback_kind!r}")
        if self.feedback_kind == "delayed" and self.trials_total % self.cluster_size != 0:
            raise ConfigError(
                "cluster_size must divide trials_total under delayed feedback"
            )

    def active_pool(self, trial_index: int) -> tuple[int, ...]:
        """Value indices available on the given 1-based trial."""
        if trial_index <= self.shift_trial:
            return tuple(range(self.num_options))
        return tuple(range(self.num_options, 2 * self.num_options))

    @property
    def pre_shift_pool(self) -> tuple[int, ...]:
        return tuple(range(self.num_options))

    @property
    def post_shift_pool(self) -> tuple[int, ...]:
        return tuple(range(self.num_options, 2 * self.num_options))


@dataclass(frozen=True)
class TargetRule:
    target_dimension: int
    target_value: int


# An option is just one value index per dimension.
OptionStimulus = tuple[int, ...]


@dataclass(frozen=True)
class Trial:
    index: int  # 1-based
    options: tuple[OptionStimulus, ...]
    target_option: int


@dataclass(frozen=True)
class Outcome:
    base: int  # 0 or 1
    noisy: float


@dataclass(frozen=True)
class TrialRecord:
    """Everything the environment knows about one completed trial."""

    trial: Trial
    choice: int
    outcomes: tuple[Outcome, ...]  # one per option, chosen or not


@dataclass(frozen=True)
class ImmediateFeedback:
    trial_index: int
    options: tuple[OptionStimulus, ...]
    choice: int
    outcome: float  # noisy outcome of the chosen option
    kind: FeedbackKind = field(default="immediate", init=False)


@dataclass(frozen=True)
class CounterfactualFeedback:
    trial_index: int
    options: tuple[OptionStimulus, ...]
    choice: int
    outcomes: tuple[float, ...]  # noisy outcome per option
    kind: FeedbackKind = field(default="counterfactual", init=False)


@dataclass(frozen=True)
class ClusterEntry:
    trial_index: int
    options: tuple[OptionStimulus, ...]
    choice: int


@dataclass(frozen=True)
class DelayedFeedback:
    trial_index: int  # delivery trial (a cluster boundary)
    cluster_sum: float  # sum of the cluster's chosen noisy outcomes
    trials: tuple[ClusterEntry, ...]
    kind: FeedbackKind = field(default="delayed", init=False)


FeedbackEvent = Union[ImmediateFeedback, CounterfactualFeedback, DelayedFeedback]


def initial_rule(config: TaskConfig, rng: np.random.Generator) -> TargetRule:
    """Draw the pre-shift target uniformly."""
    dim = int(rng.integers(config.num_dimensions))
    value = int(rng.choice(config.pre_shift_pool))
    return TargetRule(dim, value)


def generate_trial(
    config: TaskConfig, rule: TargetRule, trial_index: int, rng: np.random.Generator
) -> Trial:
    """Assemble one trial: per dimension, the active pool is permuted across options.

    The active pool has exactly num_options values, so the target value lands
    on exactly one option.
    """
    if not (1 <= trial_index <= config.trials_total):
        raise ConfigError(f"trial_index {trial_index} outside 1..{config.trials_total}")
    pool = config.active_pool(trial_index)
    if rule.target_value not in pool:
        raise ConfigError(
            f"rule value {rule.target_value} not in active pool {pool} at trial {trial_index}"
        )
    pool_arr = np.asarray(pool)
    columns = [pool_arr[rng.permutation(config.num_options)] for _ in range(config.num_dimensions)]
    options = tuple(
        tuple(int(columns[d][k]) for d in range(config.num_dimensions))
        for k in range(config.num_options)
    )
    target_option = int(np.flatnonzero(columns[rule.target_dimension] == rule.target_value)[0])
    return Trial(index=trial_index, options=options, target_option=target_option)


def sample_outcome(
    option_is_target: bool, config: TaskConfig, rng: np.random.Generator
) -> Outcome:
    p = config.p_high if option_is_target else config.p_low
    base = 1 if rng.random() < p else 0
    noise = rng.normal(0.0, config.outcome_noise_sd) if config.outcome_noise_sd > 0 else 0.0
    return Outcome(base=base, noisy=base + noise)


def apply_shift(rule: TargetRule, config: TaskConfig, rng: np.random.Generator) -> TargetRule:
    """Move the target into the post-shift value pool.

    Intra keeps the dimension; extra moves it to one of the other dimensions.
    """
    value = int(rng.choice(config.post_shift_pool))
    if config.shift_kind == "intra":
        dim = rule.target_dimension
    else:
        others = [d for d in range(config.num_dimensions) if d != rule.target_dimension]
        dim = int(rng.choice(others))
    return TargetRule(dim, value)


def package_feedback(
    kind: FeedbackKind,
    history: Sequence[TrialRecord],
    trial_index: int,
    config: TaskConfig,
) -> FeedbackEvent | None:
    """Build the agent-visible feedback for the trial just completed.

    ``history`` must contain records up to and including ``trial_index``.
    Returns None on delayed trials that are not cluster boundaries.
    """
    rec = history[trial_index - 1]
    if rec.trial.index != trial_index:
        raise ConfigError("history is not aligned with trial indices")
    if kind == "immediate":
        return ImmediateFeedback(
            trial_index=trial_index,
            options=rec.trial.options,
            choice=rec.choice,
            outcome=rec.outcomes[rec.choice].noisy,
        )
    if kind == "counterfactual":
        return CounterfactualFeedback(
            trial_index=trial_index,
            options=rec.trial.options,
            choice=rec.choice,
            outcomes=tuple(o.noisy for o in rec.outcomes),
        )
    if kind == "delayed":
        if trial_index % config.cluster_size != 0:
            return None
        cluster = history[trial_index - config.cluster_size : trial_index]
        total = sum(r.outcomes[r.choice].noisy for r in cluster)
        entries = tuple(
            ClusterEntry(trial_index=r.trial.index, options=r.trial.options, choice=r.choice)
            for r in cluster
        )
        return DelayedFeedback(trial_index=trial_index, cluster_sum=total, trials=entries)
    raise ConfigError(f"unknown feedback kind {kind!r}")
