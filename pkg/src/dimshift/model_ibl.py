"""Instance-based learning (IBL) and its mutual-information-weighted variant (WIBL).

Memory holds instances (option features, credited utility, occurrence times).
Option values are blended at decision time: each instance's activation is
power-law recency plus a weighted partial-matching penalty plus noise, and
the blended value is the softmax-over-activations mixture of instance
utilities. WIBL sets the per-dimension matching weights from the mutual
information between each dimension's values and binned utilities over the
whole memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dimshift.env import (
    ConfigError,
    CounterfactualFeedback,
    DelayedFeedback,
    FeedbackEvent,
    ImmediateFeedback,
    OptionStimulus,
)
from dimshift import stats_mi

WILDCARD = -1  # feature value that matches any query value

UTILITY_MERGE_DECIMALS = 6

NOISE_KINDS = ("logistic", "gaussian", "uniform")
CHOICE_RULES = ("argmax", "softmax")
WEIGHT_RULES = ("softmax", "iterative")


class ModelStateError(RuntimeError):
    """Internal model-state inconsistency (empty memory, bad timestamps)."""


def _merge_utility(u: float) -> float:
    """Truncate to 6 decimals so near-identical utilities share one instance.

    The inner round clears float representation error before truncating.
    """
    scale = 10.0**UTILITY_MERGE_DECIMALS
    return math.floor(round(u * scale, 3)) / scale


@dataclass(frozen=True)
class IblConfig:
    d: float = 0.5
    sigma: float = 0.25
    tau: float | None = None  # blending temperature; defaults to sigma * sqrt(2)
    mu: float = 2.5
    tau_w: float = 30.0
    weights_enabled: bool = False
    default_utility: float | None = 1.0
    noise_kind: str = "logistic"
    choice_rule: str = "argmax"
    choice_tau: float = 5.0  # only used with choice_rule = "softmax"
    weight_rule: str = "softmax"
    alpha_w: float = 0.3  # only used with weight_rule = "iterative"
    utility_bins: int = 2
    utility_lo: float = 0.0
    utility_hi: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 0:
            raise ConfigError(f"d must be >= 0, got {self.d}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.tau is not None and self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.tau is None and self.sigma == 0:
            raise ConfigError("with sigma = 0, tau must be set explicitly")
        if self.mu < 0:
            raise ConfigError(f"mu must be >= 0, got {self.mu}")
        if self.tau_w < 0:
            raise ConfigError(f"tau_w must be >= 0, got {self.tau_w}")
        if self.noise_kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise_kind {self.noise_kind!r}")
        if self.choice_rule not in CHOICE_RULES:
            raise ConfigError(f"unknown choice_rule {self.choice_rule!r}")
        if self.weight_rule not in WEIGHT_RULES:
            raise ConfigError(f"unknown weight_rule {self.weight_rule!r}")

    @property
    def blending_tau(self) -> float:
        return self.tau if self.tau is not None else self.sigma * math.sqrt(2.0)


@dataclass
class Instance:
    features: OptionStimulus  # WILDCARD entries match anything
    utility: float
    occurrences: list[int] = field(default_factory=list)

    @property
    def is_wildcard(self) -> bool:
        return all(f == WILDCARD for f in self.features)


class InstanceMemory:
    """Merged instance store with per-dimension contingency counts.

    Instances with identical (features, utility-rounded-to-6-decimals) share
    one record with multiple occurrence timestamps. If ``default_utility``
    is configured, a wildcard instance with an occurrence at time 0 is
    prepopulated; it matches every query but is excluded from the MI counts.
    """

    _GROW = 256

    def __init__(
        self,
        num_dimensions: int,
        values_per_dimension: int,
        config: IblConfig,
    ) -> None:
        self.num_dimensions = num_dimensions
        self.values_per_dimension = values_per_dimension
        self.config = config
        self.current_time = 0
        self._feats = np.empty((self._GROW, num_dimensions), dtype=np.int64)
        self._utils = np.empty(self._GROW, dtype=float)
        self._n = 0
        self._index: dict[tuple, int] = {}
        self._occ_inst = np.empty(self._GROW, dtype=np.int64)
        self._occ_time = np.empty(self._GROW, dtype=np.int64)
        self._n_occ = 0
        self.counts = np.zeros(
            (num_dimensions, values_per_dimension, config.utility_bins), dtype=np.int64
        )
        self._real_occurrences = 0
        if config.default_utility is not None:
            self._add((WILDCARD,) * num_dimensions, float(config.default_utility), 0)

    def __len__(self) -> int:
        return self._n

    @property
    def num_real_occurrences(self) -> int:
        return self._real_occurrences

    @property
    def features(self) -> np.ndarray:
        return self._feats[: self._n]

    @property
    def utilities(self) -> np.ndarray:
        return self._utils[: self._n]

    @property
    def occurrence_instances(self) -> np.ndarray:
        return self._occ_inst[: self._n_occ]

    @property
    def occurrence_times(self) -> np.ndarray:
        return self._occ_time[: self._n_occ]

    @property
    def instances(self) -> list[Instance]:
        out = [
            Instance(tuple(int(v) for v in self._feats[i]), float(self._utils[i]), [])
            for i in range(self._n)
        ]
        for i, t in zip(self._occ_inst[: self._n_occ], self._occ_time[: self._n_occ]):
            out[i].occurrences.append(int(t))
        return out

    def _add(self, features: OptionStimulus, utility: float, time: int) -> None:
        utility = _merge_utility(utility)
        key = (features, utility)
        idx = self._index.get(key)
        if idx is None:
            if self._n == len(self._utils):
                self._feats = np.concatenate(
                    [self._feats, np.empty_like(self._feats)], axis=0
                )
                self._utils = np.concatenate([self._utils, np.empty_like(self._utils)])
            idx = self._n
            self._feats[idx] = features
            self._utils[idx] = utility
            self._index[key] = idx
            self._n += 1
        if self._n_occ == len(self._occ_time):
            self._occ_inst = np.concatenate([self._occ_inst, np.empty_like(self._occ_inst)])
            self._occ_time = np.concatenate([self._occ_time, np.empty_like(self._occ_time)])
        self._occ_inst[self._n_occ] = idx
        self._occ_time[self._n_occ] = time
        self._n_occ += 1
        self.current_time = max(self.current_time, time)
        if WILDCARD not in features:
            b = stats_mi.bin_utility(
                utility,
                self.config.utility_bins,
                self.config.utility_lo,
                self.config.utility_hi,
            )
            for d in range(self.num_dimensions):
                self.counts[d, features[d], b] += 1
            self._real_occurrences += 1


def record(
    memory: InstanceMemory, option: OptionStimulus, utility: float, occurrence_time: int
) -> InstanceMemory:
    if occurrence_time < 1:
        raise ConfigError(f"occurrence_time must be >= 1, got {occurrence_time}")
    memory._add(tuple(option), utility, occurrence_time)
    return memory


def similarity(query: OptionStimulus, instance_features: OptionStimulus) -> np.ndarray:
    """Per-dimension exact-match indicators; wildcard features always match."""
    return np.array(
        [1.0 if f == WILDCARD or f == q else 0.0 for q, f in zip(query, instance_features)]
    )


def _noise(rng: np.random.Generator, shape: tuple[int, ...], kind: str) -> np.ndarray:
    if kind == "logistic":
        u = rng.random(shape)
        return np.log((1.0 - u) / u)
    if kind == "gaussian":
        return rng.standard_normal(shape)
    return rng.uniform(-1.0, 1.0, shape)


def activation(
    instance: Instance,
    query: OptionStimulus,
    weights: np.ndarray,
    t: int,
    config: IblConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Recency term + weighted mismatch penalty + optional noise, for one instance."""
    occ = np.asarray(instance.occurrences)
    if occ.size == 0:
        raise ModelStateError("instance has no occurrences")
    if (occ >= t).any():
        raise ModelStateError(f"occurrence at or after query time {t}")
    recency = float(np.log(np.sum((t - occ) ** (-config.d), dtype=float)))
    sim = similarity(query, instance.features)
    penalty = config.mu * float(np.dot(weights, sim - 1.0))
    noise = 0.0
    if config.sigma > 0:
        if rng is None:
            raise ConfigError("rng required when sigma > 0")
        noise = config.sigma * float(_noise(rng, (), config.noise_kind))
    return recency + penalty + noise


def _blended_values(
    memory: InstanceMemory,
    options: tuple[OptionStimulus, ...],
    weights: np.ndarray,
    t: int,
    config: IblConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Blended value per option, sharing one activation-noise draw per (option, instance)."""
    n = len(memory)
    if n == 0:
        raise ModelStateError("memory is empty; configure default_utility or record first")
    occ_t = memory.occurrence_times
    if occ_t.size and occ_t.max() >= t:
        raise ModelStateError(f"memory contains occurrences at or after query time {t}")
    lags = (t - occ_t).astype(float)
    base = np.log(np.bincount(memory.occurrence_instances, weights=lags ** (-config.d), minlength=n))
    opts = np.asarray(options, dtype=np.int64)  # (k, ndim)
    feats = memory.features  # (n, ndim)
    match = (feats[None, :, :] == opts[:, None, :]) | (feats[None, :, :] == WILDCARD)
    penalty = -config.mu * ((~match) @ weights)  # (k, n)
    a = base[None, :] + penalty
    if config.sigma > 0:
        a = a + config.sigma * _noise(rng, a.shape, config.noise_kind)
    tau = config.blending_tau
    z = a / tau
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs @ memory.utilities


def blended_value(
    memory: InstanceMemory,
    query: OptionStimulus,
    weights: np.ndarray,
    t: int,
    config: IblConfig,
    rng: np.random.Generator | None = None,
) -> float:
    if rng is None:
        if config.sigma > 0:
            raise ConfigError("rng required when sigma > 0")
        rng = np.random.default_rng(0)  # unused at sigma = 0
    return float(_blended_values(memory, (tuple(query),), weights, t, config, rng)[0])


def choose(
    memory: InstanceMemory,
    options: tuple[OptionStimulus, ...],
    weights: np.ndarray,
    t: int,
    config: IblConfig,
    rng: np.random.Generator,
) -> int:
    values = _blended_values(memory, options, weights, t, config, rng)
    if config.choice_rule == "softmax":
        z = config.choice_tau * (values - values.max())
        e = np.exp(z)
        return int(rng.choice(len(options), p=e / e.sum()))
    ties = np.flatnonzero(values == values.max())
    if ties.size == 1:
        return int(ties[0])
    return int(ties[rng.integers(ties.size)])


def compute_attention(memory: InstanceMemory, config: IblConfig) -> np.ndarray:
    """Softmax of tau_w-scaled per-dimension MI; uniform with no real instances."""
    nd = memory.num_dimensions
    if memory.num_real_occurrences == 0:
        return np.full(nd, 1.0 / nd)
    mi = np.array([stats_mi.mutual_information(memory.counts[d]) for d in range(nd)])
    z = config.tau_w * mi
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


class IblAgent:
    """Drives an InstanceMemory through the choose/observe loop.

    With ``weights_enabled`` False the matching weights stay uniform (IBL);
    with it True they are recomputed from memory before every choice (WIBL).
    Both consume identical random draws, so WIBL with weights disabled
    reproduces IBL exactly under a shared seed.
    """

    def __init__(
        self,
        config: IblConfig,
        num_dimensions: int,
        values_per_dimension: int,
        rng: np.random.Generator,
    ) -> None:
        self.config = config
        self.rng = rng
        self.memory = InstanceMemory(num_dimensions, values_per_dimension, config)
        self.weights = np.full(num_dimensions, 1.0 / num_dimensions)

    def _refresh_weights(self) -> None:
        if self.config.weight_rule == "iterative":
            nd = self.memory.num_dimensions
            if self.memory.num_real_occurrences:
                mi = np.array(
                    [stats_mi.mutual_information(self.memory.counts[d]) for d in range(nd)]
                )
                self.weights = self.weights + self.config.alpha_w * (mi - self.weights)
        else:
            self.weights = compute_attention(self.memory, self.config)

    def choose(self, options: tuple[OptionStimulus, ...], trial_index: int) -> int:
        if self.config.weights_enabled:
            self._refresh_weights()
        return choose(self.memory, options, self.weights, trial_index, self.config, self.rng)

    def observe(self, event: FeedbackEvent) -> None:
        if isinstance(event, ImmediateFeedback):
            record(self.memory, event.options[event.choice], event.outcome, event.trial_index)
        elif isinstance(event, CounterfactualFeedback):
            for opt, outcome in zip(event.options, event.outcomes):
                record(self.memory, opt, outcome, event.trial_index)
        elif isinstance(event, DelayedFeedback):
            credited = event.cluster_sum / len(event.trials)
            for entry in event.trials:
                record(self.memory, entry.options[entry.choice], credited, entry.trial_index)
        else:
            raise ConfigError(f"unknown feedback event {type(event).__name__}")
