"""Episode runner and grid aggregation.

Runs many independent agents per (model, shift, feedback) condition,
aggregates per-trial correctness into learning curves, and computes
jumpstart and asymptote metrics. Per-agent seeds are derived from the
master seed, the condition id, and the agent index, so results are
independent of execution order and parallel schedule.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from dimshift.env import (
    ConfigError,
    TaskConfig,
    TrialRecord,
    apply_shift,
    generate_trial,
    initial_rule,
    package_feedback,
    sample_outcome,
)
from dimshift.model_frl import FrlAgent, FrlConfig
from dimshift.model_ibl import IblAgent, IblConfig

MODEL_NAMES = ("frl", "wrl", "ibl", "wibl")

JUMPSTART_WINDOW = 10
ASYMPTOTE_WINDOW = 10

DEFAULT_MASTER_SEED = 20240501


@dataclass(frozen=True)
class ConditionSpec:
    model: str
    shift_kind: str
    feedback_kind: str
    task: TaskConfig
    model_params: FrlConfig | IblConfig
    n_agents: int = 200
    master_seed: int = DEFAULT_MASTER_SEED

    def __post_init__(self) -> None:
        if self.model not in MODEL_NAMES:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")

    @property
    def condition_id(self) -> str:
        return f"{self.model}-{self.shift_kind}-{self.feedback_kind}"

    @property
    def resolved_task(self) -> TaskConfig:
        return replace(
            self.task, shift_kind=self.shift_kind, feedback_kind=self.feedback_kind
        )


@dataclass
class EpisodeTrace:
    correct: np.ndarray  # bool per trial
    choices: np.ndarray  # option index per trial
    agent_seed: int


@dataclass
class ConditionResult:
    spec: ConditionSpec
    mean_correct: np.ndarray  # per trial, across agents
    sd_correct: np.ndarray  # per trial, across agents
    jumpstart: float
    pre_shift_asymptote: float
    final_asymptote: float
    agent_jumpstarts: np.ndarray
    agent_pre_asymptotes: np.ndarray
    agent_final_asymptotes: np.ndarray


def agent_seed(spec: ConditionSpec, agent_index: int) -> np.random.SeedSequence:
    cond_hash = zlib.crc32(spec.condition_id.encode())
    return np.random.SeedSequence([spec.master_seed, cond_hash, agent_index])


def build_model(spec: ConditionSpec, rng: np.random.Generator):
    task = spec.task
    if spec.model in ("frl", "wrl"):
        assert isinstance(spec.model_params, FrlConfig)
        return FrlAgent(spec.model_params, task.num_dimensions, task.values_per_dimension, rng)
    assert isinstance(spec.model_params, IblConfig)
    return IblAgent(spec.model_params, task.num_dimensions, task.values_per_dimension, rng)


def run_agent(spec: ConditionSpec, agent_index: int) -> EpisodeTrace:
    ss = agent_seed(spec, agent_index)
    env_ss, model_ss = ss.spawn(2)
    env_rng = np.random.default_rng(env_ss)
    model_rng = np.random.default_rng(model_ss)
    task = spec.resolved_task
    model = build_model(spec, model_rng)
    rule = initial_rule(task, env_rng)
    history: list[TrialRecord] = []
    correct = np.zeros(task.trials_total, dtype=bool)
    choices = np.zeros(task.trials_total, dtype=np.int64)
    for t in range(1, task.trials_total + 1):
        if t == task.shift_trial + 1:
            rule = apply_shift(rule, task, env_rng)
        trial = generate_trial(task, rule, t, env_rng)
        choice = model.choose(trial.options, t)
        outcomes = tuple(
            sample_outcome(k == trial.target_option, task, env_rng)
            for k in range(task.num_options)
        )
        history.append(TrialRecord(trial=trial, choice=choice, outcomes=outcomes))
        event = package_feedback(task.feedback_kind, history, t, task)
        if event is not None:
            model.observe(event)
        correct[t - 1] = choice == trial.target_option
        choices[t - 1] = choice
    return EpisodeTrace(correct=correct, choices=choices, agent_seed=int(ss.generate_state(1)[0]))


def jumpstart(correct: np.ndarray, shift_trial: int, window: int = JUMPSTART_WINDOW) -> float:
    """Mean correctness over the first ``window`` post-shift trials."""
    return float(np.mean(correct[shift_trial : shift_trial + window]))


def asymptote(correct: np.ndarray, end_trial: int, window: int = ASYMPTOTE_WINDOW) -> float:
    """Mean correctness over the last ``window`` trials ending at ``end_trial`` (1-based)."""
    return float(np.mean(correct[end_trial - window : end_trial]))


def run_condition(spec: ConditionSpec) -> ConditionResult:
    task = spec.resolved_task
    traces = np.zeros((spec.n_agents, task.trials_total), dtype=bool)
    for a in range(spec.n_agents):
        traces[a] = run_agent(spec, a).correct
    curves = traces.astype(float)
    jumps = np.array([jumpstart(c, task.shift_trial) for c in curves])
    pres = np.array([asymptote(c, task.shift_trial) for c in curves])
    finals = np.array([asymptote(c, task.trials_total) for c in curves])
    return ConditionResult(
        spec=spec,
        mean_correct=curves.mean(axis=0),
        sd_correct=curves.std(axis=0),
        jumpstart=float(jumps.mean()),
        pre_shift_asymptote=float(pres.mean()),
        final_asymptote=float(finals.mean()),
        agent_jumpstarts=jumps,
        agent_pre_asymptotes=pres,
        agent_final_asymptotes=finals,
    )


@dataclass(frozen=True)
class RunConfig:
    task: TaskConfig = field(default_factory=TaskConfig)
    frl: FrlConfig = field(default_factory=lambda: FrlConfig(weights_enabled=False))
    wrl: FrlConfig = field(default_factory=lambda: FrlConfig(weights_enabled=True))
    ibl: IblConfig = field(default_factory=lambda: IblConfig(weights_enabled=False))
    wibl: IblConfig = field(default_factory=lambda: IblConfig(weights_enabled=True))
    models: tuple[str, ...] = MODEL_NAMES
    shifts: tuple[str, ...] = ("intra", "extra")
    feedback: tuple[str, ...] = ("immediate", "delayed", "counterfactual")
    n_agents: int = 200
    master_seed: int = DEFAULT_MASTER_SEED

    def __post_init__(self) -> None:
        for m in self.models:
            if m not in MODEL_NAMES:
                raise ConfigError(f"unknown model {m!r}")
        if not self.models or not self.shifts or not self.feedback:
            raise ConfigError("models, shifts, and feedback selections must be nonempty")

    def model_params(self, model: str) -> FrlConfig | IblConfig:
        return getattr(self, model)

    def condition_specs(self) -> list[ConditionSpec]:
        return [
            ConditionSpec(
                model=m,
                shift_kind=s,
                feedback_kind=f,
                task=self.task,
                model_params=self.model_params(m),
                n_agents=self.n_agents,
                master_seed=self.master_seed,
            )
            for m in self.models
            for s in self.shifts
            for f in self.feedback
        ]


def run_grid(config: RunConfig, workers: int | None = None) -> list[ConditionResult]:
    """Run every cell of the model x shift x feedback grid.

    With ``workers`` > 1 the cells run in parallel processes; per-agent
    seeding makes the output identical to a serial run.
    """
    specs = config.condition_specs()
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_condition, specs))
    return [run_condition(s) for s in specs]
