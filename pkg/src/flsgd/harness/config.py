"""Declarative experiment configuration loaded from TOML."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..errors import ConfigError

THEOREM_TAGS = ("T1", "T2", "T3", "T4", "T5", "unregularized-baseline")


@dataclass
class GridConfig:
    size: int = 129
    scheme: str = "composite-trapezoid"


@dataclass
class KernelConfig:
    family: str = "cosine-series"
    parameters: list[float] = field(default_factory=list)


@dataclass
class ModelConfig:
    kind: str = "commuting"  # "commuting" or "kernels"
    p_K: float = 2.0
    p_C: float = 2.0
    length: int = 32
    K: KernelConfig | None = None
    C: KernelConfig | None = None
    noise_sigma: float = 1.0
    rel_cutoff: float = 1e-10


@dataclass
class SourceConfig:
    kind: str = "prediction"
    exponent: float = 0.5
    decay: float = 1.0  # seed coefficients scale * l^{-decay}
    scale: float = 1.0
    modes: int | None = None  # kernels model: number of seed modes (default: model length)
    extra: dict[str, float] = field(default_factory=dict)


@dataclass
class ScheduleConfig:
    theorem: str = "T3"
    s: float | str | None = "auto"
    epsilon: float = 0.05
    step_mode: str = "caps"  # "caps" or "override"
    gamma: float | None = None


@dataclass
class ExperimentSection:
    n_list: list[int] = field(default_factory=lambda: [2**p for p in range(7, 14)])
    trials: int = 50
    seed: int = 0
    tolerance: float = 0.15


@dataclass
class AuditConfig:
    contraction_samples: int = 1000
    uniform_trials: int = 200
    uniform_n: int = 1024
    dominance_trials: int = 200
    dominance_k: list[int] = field(default_factory=lambda: [2**p for p in range(4, 11)])
    step_mode: str = "contraction"  # "contraction" or "caps"
    step_fraction: float = 0.5


@dataclass
class OutputConfig:
    dir: str = "out"


@dataclass
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    source: SourceConfig = field(default_factory=SourceConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    audit: AuditConfig = field(default_factory=AuditConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self) -> None:
        validate(self)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_NESTED = {
    ExperimentConfig: {
        "grid": GridConfig,
        "model": ModelConfig,
        "source": SourceConfig,
        "schedule": ScheduleConfig,
        "experiment": ExperimentSection,
        "audit": AuditConfig,
        "output": OutputConfig,
    },
    ModelConfig: {"K": KernelConfig, "C": KernelConfig},
}


def _build(cls, table: dict[str, Any], where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    kwargs = {}
    nested = _NESTED.get(cls, {})
    for key, val in table.items():
        sub = nested.get(key)
        kwargs[key] = _build(sub, val, f"{where}.{key}" if where else key) if sub else val
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def from_dict(data: dict[str, Any]) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return from_dict(data)


def validate(cfg: ExperimentConfig) -> None:
    e = cfg.experiment
    ns = list(e.n_list)
    if len(ns) < 4 or any(int(n) != n or n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("experiment.n_list must hold >= 4 strictly increasing positive integers")
    if e.trials < 20:
        raise ConfigError("experiment.trials must be >= 20")
    if not 0 <= int(e.seed) < 2**64:
        raise ConfigError("experiment.seed must be an unsigned 64-bit integer")
    if e.tolerance <= 0:
        raise ConfigError("experiment.tolerance must be positive")
    s = cfg.schedule
    if s.theorem not in THEOREM_TAGS:
        raise ConfigError(f"schedule.theorem must be one of {THEOREM_TAGS}")
    if s.step_mode not in ("caps", "override"):
        raise ConfigError("schedule.step_mode must be 'caps' or 'override'")
    if s.step_mode == "override" and (s.gamma is None or s.gamma <= 0):
        raise ConfigError("schedule.gamma must be positive when step_mode = 'override'")
    if isinstance(s.s, str) and s.s != "auto":
        raise ConfigError("schedule.s must be a number in (0, 1], 'auto', or omitted")
    if isinstance(s.s, (int, float)) and not 0 < s.s <= 1:
        raise ConfigError("schedule.s must lie in (0, 1]")
    m = cfg.model
    if m.kind not in ("commuting", "kernels"):
        raise ConfigError("model.kind must be 'commuting' or 'kernels'")
    if m.kind == "kernels" and (m.K is None or m.C is None):
        raise ConfigError("model.kind = 'kernels' needs [model.K] and [model.C]")
    if m.noise_sigma < 0:
        raise ConfigError("model.noise_sigma must be nonnegative")
    src = cfg.source
    if src.kind not in ("prediction", "estimation"):
        raise ConfigError("source.kind must be 'prediction' or 'estimation'")
    for kind, ex in [(src.kind, src.exponent), *src.extra.items()]:
        if kind not in ("prediction", "estimation"):
            raise ConfigError(f"unknown source kind {kind!r}")
        if not 0 < ex <= 1:
            raise ConfigError("source exponents must lie in (0, 1]")
    a = cfg.audit
    if a.step_mode not in ("contraction", "caps"):
        raise ConfigError("audit.step_mode must be 'contraction' or 'caps'")
    if not 0 < a.step_fraction <= 1:
        raise ConfigError("audit.step_fraction must lie in (0, 1]")
