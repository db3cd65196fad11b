"""Feature reinforcement learning (FRL) and its attention-weighted variant (WRL).

Per-(dimension, value) feature values are learned with a delta rule and
decayed when presented but not chosen. An option's value is the (optionally
weighted) sum of its feature values; choices are sampled from a softmax.
WRL additionally keeps one attention weight per dimension, nudged toward
each delivered scalar reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dimshift.env import (
    ConfigError,
    CounterfactualFeedback,
    DelayedFeedback,
    FeedbackEvent,
    ImmediateFeedback,
    OptionStimulus,
)


@dataclass(frozen=True)
class FrlConfig:
    alpha: float = 0.3
    decay: float = 0.9
    tau: float = 6.0
    alpha_w: float = 0.3
    weights_enabled: bool = False
    initial_value: float = 0.0

    def __post_init__(self) -> None:
        if not (0 < self.alpha <= 1):
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if not (0 <= self.decay <= 1):
            raise ConfigError(f"decay must be in [0, 1], got {self.decay}")
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if not (0 < self.alpha_w <= 1):
            raise ConfigError(f"alpha_w must be in (0, 1], got {self.alpha_w}")


class FeatureValueTable:
    """Learned feature values ``v[dim, value]`` plus per-dimension weights."""

    def __init__(
        self, num_dimensions: int, values_per_dimension: int, initial_value: float = 0.0
    ) -> None:
        self.num_dimensions = num_dimensions
        self.values_per_dimension = values_per_dimension
        self.v = np.full((num_dimensions, values_per_dimension), initial_value, dtype=float)
        self.w = np.full(num_dimensions, 1.0 / num_dimensions, dtype=float)


def option_value(
    table: FeatureValueTable, option: OptionStimulus, weights_enabled: bool
) -> float:
    dims = np.arange(table.num_dimensions)
    vals = table.v[dims, list(option)]
    if weights_enabled:
        vals = table.w * vals
    return float(vals.sum())


def choice_probabilities(values: np.ndarray, tau: float) -> np.ndarray:
    """Softmax p(c) proportional to exp(tau * V(c)), max-subtracted."""
    values = np.asarray(values, dtype=float)
    z = tau * (values - values.max())
    e = np.exp(z)
    return e / e.sum()


def choose(
    table: FeatureValueTable,
    options: tuple[OptionStimulus, ...],
    tau: float,
    rng: np.random.Generator,
    weights_enabled: bool = False,
) -> int:
    values = np.array([option_value(table, o, weights_enabled) for o in options])
    probs = choice_probabilities(values, tau)
    return int(rng.choice(len(options), p=probs))


def update_chosen(
    table: FeatureValueTable, option: OptionStimulus, reward: float, alpha: float
) -> FeatureValueTable:
    for d, val in enumerate(option):
        table.v[d, val] += alpha * (reward - table.v[d, val])
    return table


def decay_unchosen(
    table: FeatureValueTable,
    options: tuple[OptionStimulus, ...],
    chosen: int,
    delta: float,
) -> FeatureValueTable:
    chosen_pairs = {(d, v) for d, v in enumerate(options[chosen])}
    to_decay = {
        (d, v)
        for k, opt in enumerate(options)
        if k != chosen
        for d, v in enumerate(opt)
    } - chosen_pairs
    for d, v in to_decay:
        table.v[d, v] *= delta
    return table


def update_weights(table: FeatureValueTable, reward: float, alpha_w: float) -> FeatureValueTable:
    table.w += alpha_w * (reward - table.w)
    return table


class FrlAgent:
    """Drives a FeatureValueTable through the choose/observe loop.

    With ``weights_enabled`` False this is plain FRL; with it True, WRL.
    The two consume identical random draws, so WRL with weights disabled
    reproduces FRL exactly under a shared seed.
    """

    def __init__(
        self,
        config: FrlConfig,
        num_dimensions: int,
        values_per_dimension: int,
        rng: np.random.Generator,
    ) -> None:
        self.config = config
        self.rng = rng
        self.table = FeatureValueTable(
            num_dimensions, values_per_dimension, config.initial_value
        )

    def choose(self, options: tuple[OptionStimulus, ...], trial_index: int) -> int:
        return choose(
            self.table, options, self.config.tau, self.rng, self.config.weights_enabled
        )

    def observe(self, event: FeedbackEvent) -> None:
        cfg = self.config
        if isinstance(event, ImmediateFeedback):
            update_chosen(self.table, event.options[event.choice], event.outcome, cfg.alpha)
            decay_unchosen(self.table, event.options, event.choice, cfg.decay)
            if cfg.weights_enabled:
                update_weights(self.table, event.outcome, cfg.alpha_w)
        elif isinstance(event, CounterfactualFeedback):
            # Every presented feature got genuine feedback, so nothing decays.
            for opt, outcome in zip(event.options, event.outcomes):
                update_chosen(self.table, opt, outcome, cfg.alpha)
            if cfg.weights_enabled:
                update_weights(self.table, event.outcomes[event.choice], cfg.alpha_w)
        elif isinstance(event, DelayedFeedback):
            credited = event.cluster_sum / len(event.trials)
            for entry in event.trials:
                update_chosen(self.table, entry.options[entry.choice], credited, cfg.alpha)
                decay_unchosen(self.table, entry.options, entry.choice, cfg.decay)
                if cfg.weights_enabled:
                    update_weights(self.table, credited, cfg.alpha_w)
        else:
            raise ConfigError(f"unknown feedback event {type(event).__name__}")
