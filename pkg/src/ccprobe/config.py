"""Experiment configuration: one YAML document, schema-validated.

Every section maps onto a dataclass; unknown keys anywhere are rejected so a
typo fails fast instead of silently running the defaults. The canonical hash
of a config is embedded in every CSV the runner emits, which together with
the seed makes reruns byte-comparable.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields

import yaml

from .adversary import PerturbMode, RewardMode, SurfaceMode
from .cem import CemConfig
from .learned import RewardParams
from .netsim import ConfigError, SimConfig
from .tracegen import SmoothnessBudget


class SchemaError(ValueError):
    pass


@dataclass
class TraceSpec:
    """Where episode traces come from."""

    source: str = "random"        # random | constant | files | burst
    n: int = 10                   # number of random traces
    length: int = 600             # intervals per generated trace
    constant_mbps: float = 48.0
    paths: list[str] = field(default_factory=list)
    # burst parameters (triangle pattern)
    peak: float = 80.0
    trough: float = 4.0
    rise_intervals: int = 20
    fall_intervals: int = 60

    def __post_init__(self):
        if self.source not in ("random", "constant", "files", "burst"):
            raise SchemaError(f"unknown trace source {self.source!r}")
        if self.source == "files" and not self.paths:
            raise SchemaError("trace source 'files' needs non-empty paths")
        if self.n < 1 or self.length < 1:
            raise SchemaError("trace n and length must be >= 1")


@dataclass
class AdversaryConfig:
    surface: str = "env"          # env | feature
    reward_mode: str = "delay_constrained"   # naive | delay_constrained
    x_fraction: float = 0.05
    perturb_mode: str = "adversarial"        # adversarial | random_noise | clean
    alpha: float = 1.0
    window_h: int = 5
    window_k: int = 1
    tau_ms: float | None = None   # None -> calibrate from the baseline runs
    episodes: int = 320
    rollouts: int = 8

    def __post_init__(self):
        if self.surface not in ("env", "feature"):
            raise SchemaError(f"unknown surface {self.surface!r}")
        if self.reward_mode not in ("naive", "delay_constrained"):
            raise SchemaError(f"unknown reward_mode {self.reward_mode!r}")
        if self.perturb_mode not in ("adversarial", "random_noise", "clean"):
            raise SchemaError(f"unknown perturb_mode {self.perturb_mode!r}")

    def surface_enum(self) -> SurfaceMode:
        return (SurfaceMode.ENV_BANDWIDTH if self.surface == "env"
                else SurfaceMode.FEATURE_MIN_RTT)

    def reward_enum(self) -> RewardMode:
        return (RewardMode.NAIVE if self.reward_mode == "naive"
                else RewardMode.DELAY_CONSTRAINED)

    def perturb_enum(self) -> PerturbMode:
        return PerturbMode(
            {"adversarial": "adversarial", "random_noise": "random_noise",
             "clean": "clean"}[self.perturb_mode])


@dataclass
class TrainSpec:
    episodes: int = 640
    hidden: int = 0               # 0 = linear policy
    a_max: float = 2.0
    mix_p: float = 0.2
    population: int = 32
    elite_frac: float = 0.25
    sigma0: float = 1.0
    extra_noise: float = 0.25
    noise_decay: float = 0.9

    def cem(self, seed: int) -> CemConfig:
        return CemConfig(population=self.population, elite_frac=self.elite_frac,
                         sigma0=self.sigma0, extra_noise=self.extra_noise,
                         noise_decay=self.noise_decay, seed=seed)


@dataclass
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    budget: SmoothnessBudget = field(default_factory=SmoothnessBudget)
    traces: TraceSpec = field(default_factory=TraceSpec)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    train: TrainSpec = field(default_factory=TrainSpec)
    controller: str = "reno"
    controller_constants: dict = field(default_factory=dict)
    seed: int = 0
    repetitions: int = 3
    output_dir: str = "runs"

    def __post_init__(self):
        self.sim.validate()
        if self.repetitions < 1:
            raise SchemaError("repetitions must be >= 1")

    def canonical(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {
    "sim": SimConfig,
    "reward": RewardParams,
    "budget": SmoothnessBudget,
    "traces": TraceSpec,
    "adversary": AdversaryConfig,
    "train": TrainSpec,
}
_SCALARS = ("controller", "controller_constants", "seed", "repetitions",
            "output_dir")


def _build(cls, data: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError, ConfigError) as e:
        raise SchemaError(f"{where}: {e}") from e


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise SchemaError("config document must be a mapping")
    unknown = set(doc) - set(_SECTIONS) - set(_SCALARS)
    if unknown:
        raise SchemaError(f"top level: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = doc.get(name, {})
        if not isinstance(section, dict):
            raise SchemaError(f"section {name!r} must be a mapping")
        kwargs[name] = _build(cls, section, name)
    for name in _SCALARS:
        if name in doc:
            kwargs[name] = doc[name]
    return _build(ExperimentConfig, kwargs, "experiment")


def load_config(path: str) -> ExperimentConfig:
    with open(path) as f:
        doc = yaml.safe_load(f)
    return config_from_dict(doc or {})
