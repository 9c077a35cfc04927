"""Experiment configuration: defaults, YAML round-trip, validation.

Field names and defaults mirror the model-parameter table the experiments
run with; omitting a field in a config file always yields that default.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .binning import BinningConfig
from .errors import ParameterError
from .harness import PatternSource, Trainer
from .infomorphic import TrainConfig
from .pid import GoalWeights


@dataclass
class NetworkSection:
    N: int = 100
    w_T: float = 2.3
    lambda_r: float = 1e-3


@dataclass
class TrainingSection:
    optimizer: str = "adam"
    eta: float = 0.05
    epochs: int = 5000
    reps: int = 1


@dataclass
class BinningSection:
    n_t: int = 2
    n_r: int = 60
    sigma_t: float = 1e-6
    sigma_r: float = 0.5
    padding: float = 1.0
    width_scale: str = "diagonal"


@dataclass
class TestingSection:
    sequential: bool = False
    N_iter: int = 100
    theta: float = 0.95


@dataclass
class GoalSection:
    unq_R: float = 0.0
    unq_T: float = 0.0
    red: float = 1.0
    syn: float = 0.0
    res: float = 0.0


@dataclass
class PatternSection:
    source: str = "iid"                  # iid | correlated | file
    persistence: float | None = None
    path: str | None = None
    alpha: float | None = None
    m: int | None = None


@dataclass
class RunSection:
    seeds: list = field(default_factory=lambda: [0])
    jobs: int = 1
    out: str | None = None


@dataclass
class ExperimentConfig:
    method: str = "infomorphic"          # hebbian | infomorphic
    network: NetworkSection = field(default_factory=NetworkSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    binning: BinningSection = field(default_factory=BinningSection)
    testing: TestingSection = field(default_factory=TestingSection)
    goal: GoalSection = field(default_factory=GoalSection)
    patterns: PatternSection = field(default_factory=PatternSection)
    run: RunSection = field(default_factory=RunSection)

    def validate(self) -> "ExperimentConfig":
        if self.method not in ("hebbian", "infomorphic"):
            raise ParameterError(f"method must be hebbian or infomorphic, got {self.method!r}")
        if self.training.optimizer != "adam":
            raise ParameterError(f"only the adam optimizer is implemented, got {self.training.optimizer!r}")
        if self.testing.sequential:
            raise ParameterError("sequential updates are not implemented; set testing.sequential = false")
        if self.network.N < 2:
            raise ParameterError(f"network.N must be >= 2, got {self.network.N}")
        if not self.run.seeds:
            raise ParameterError("run.seeds must not be empty")
        if any(int(s) < 0 for s in self.run.seeds):
            raise ParameterError("seeds must be nonnegative integers")
        if self.run.jobs < 1:
            raise ParameterError(f"run.jobs must be >= 1, got {self.run.jobs}")
        # Constructing these runs their own domain checks.
        self.binning_config()
        self.pattern_source()
        return self

    # -- conversions into the library types ---------------------------------

    def goal_weights(self) -> GoalWeights:
        g = self.goal
        return GoalWeights(unq_r=g.unq_R, unq_t=g.unq_T, red=g.red, syn=g.syn, res=g.res)

    def binning_config(self) -> BinningConfig:
        b = self.binning
        return BinningConfig(n_r=b.n_r, n_t=b.n_t, sigma_r=b.sigma_r, sigma_t=b.sigma_t,
                             padding=b.padding, width_scale=b.width_scale)

    def train_config(self, seed: int = 0, goal: GoalWeights | None = None) -> TrainConfig:
        return TrainConfig(
            goal=goal if goal is not None else self.goal_weights(),
            epochs=self.training.epochs,
            reps=self.training.reps,
            eta=self.training.eta,
            lambda_r=self.network.lambda_r,
            target_weight=self.network.w_T,
            binning=self.binning_config(),
            seed=seed,
        )

    def trainer(self, seed: int = 0) -> Trainer:
        if self.method == "hebbian":
            return Trainer("hebbian")
        return Trainer("infomorphic", self.train_config(seed=seed))

    def pattern_source(self) -> PatternSource:
        p = self.patterns
        return PatternSource(kind=p.source, persistence=p.persistence, path=p.path)

    def pattern_count(self) -> int:
        p = self.patterns
        if p.m is not None:
            return int(p.m)
        if p.alpha is not None:
            return int(round(p.alpha * self.network.N))
        raise ParameterError("patterns.m or patterns.alpha must be set")

    # -- dict / YAML round-trip ----------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        sections = {
            "network": NetworkSection, "training": TrainingSection,
            "binning": BinningSection, "testing": TestingSection,
            "goal": GoalSection, "patterns": PatternSection, "run": RunSection,
        }
        data = dict(data or {})
        kwargs = {}
        if "method" in data:
            kwargs["method"] = data.pop("method")
        for name, section_cls in sections.items():
            payload = data.pop(name, {}) or {}
            if not isinstance(payload, dict):
                raise ParameterError(f"config section {name!r} must be a mapping")
            known = {f for f in section_cls.__dataclass_fields__}
            unknown = set(payload) - known
            if unknown:
                raise ParameterError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
            kwargs[name] = section_cls(**payload)
        if data:
            raise ParameterError(f"unknown top-level config keys: {sorted(data)}")
        return cls(**kwargs).validate()


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: config must be a mapping")
    return ExperimentConfig.from_dict(data)


def save_config(path, config: ExperimentConfig) -> None:
    Path(path).write_text(
        yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=False),
        encoding="utf-8")
