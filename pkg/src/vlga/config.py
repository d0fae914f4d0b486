"""One YAML run configuration covering space, GA, evaluator, and comparison.

Every section is optional and every key has a default, so an empty file (or
no file at all) is a valid configuration.  Unknown keys are rejected rather
than ignored: a typo that silently falls back to a default is the kind of
bug that costs a week of GPU time.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .baselines import STRATEGIES
from .engine import GaConfig
from .evaluators import SurrogateParams
from .search_space import ConfigError, SearchSpace


def _reject_unknown(section: str, data: dict, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")


def _worker_cmd(value) -> tuple[str, ...]:
    """Accept a shell string or an argv list."""
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(shlex.split(value))
    if isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
        return tuple(value)
    raise ConfigError(f"worker_cmd must be a string or list of strings: {value!r}")


@dataclass(frozen=True)
class EvaluatorConfig:
    """Which evaluator backs the search, and how to reach it."""

    kind: str = "surrogate"
    surrogate: SurrogateParams = field(default_factory=SurrogateParams)
    worker_cmd: tuple[str, ...] = ()
    pool_size: int = 1
    dataset: str = "cifar10"
    handshake_timeout: float = 60.0
    eval_timeout: float = 3600.0

    def __post_init__(self) -> None:
        if self.kind not in ("surrogate", "external"):
            raise ConfigError(f"evaluator kind must be surrogate or external, got {self.kind!r}")
        if self.pool_size < 1:
            raise ConfigError("pool_size must be positive")
        if self.handshake_timeout <= 0 or self.eval_timeout <= 0:
            raise ConfigError("timeouts must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluatorConfig":
        _reject_unknown("evaluator", data, {
            "kind", "surrogate", "worker_cmd", "pool_size", "dataset",
            "handshake_timeout", "eval_timeout",
        })
        kwargs = dict(data)
        if "surrogate" in kwargs:
            try:
                kwargs["surrogate"] = SurrogateParams.from_dict(kwargs["surrogate"])
            except TypeError as exc:
                raise ConfigError(f"bad surrogate params: {exc}") from exc
        if "worker_cmd" in kwargs:
            kwargs["worker_cmd"] = _worker_cmd(kwargs["worker_cmd"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "surrogate": self.surrogate.to_dict(),
            "worker_cmd": list(self.worker_cmd),
            "pool_size": self.pool_size,
            "dataset": self.dataset,
            "handshake_timeout": self.handshake_timeout,
            "eval_timeout": self.eval_timeout,
        }


@dataclass(frozen=True)
class CompareConfig:
    """Defaults for budget-matched strategy comparisons."""

    strategies: tuple[str, ...] = STRATEGIES
    seeds: tuple[int, ...] = tuple(range(10))
    budget_units: float = 1500.0
    layer_range: tuple[int, int] = (2, 10)
    fixed_phase: int = 1
    epoch_multiplier: int = 16

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "layer_range", tuple(self.layer_range))
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ConfigError(f"unknown strategies {bad}; choose from {list(STRATEGIES)}")
        if not self.strategies:
            raise ConfigError("strategies must be non-empty")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.budget_units <= 0:
            raise ConfigError("budget_units must be positive")
        if len(self.layer_range) != 2 or self.layer_range[0] < 2 \
                or self.layer_range[1] < self.layer_range[0]:
            raise ConfigError(f"bad layer_range {self.layer_range}")
        if self.fixed_phase < 0:
            raise ConfigError("fixed_phase must be non-negative")
        if self.epoch_multiplier < 1:
            raise ConfigError("epoch_multiplier must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "CompareConfig":
        _reject_unknown("compare", data, {
            "strategies", "seeds", "budget_units", "layer_range",
            "fixed_phase", "epoch_multiplier",
        })
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "strategies": list(self.strategies),
            "seeds": list(self.seeds),
            "budget_units": self.budget_units,
            "layer_range": list(self.layer_range),
            "fixed_phase": self.fixed_phase,
            "epoch_multiplier": self.epoch_multiplier,
        }


@dataclass(frozen=True)
class RunConfig:
    space: SearchSpace = field(default_factory=SearchSpace)
    ga: GaConfig = field(default_factory=GaConfig)
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _reject_unknown("top-level", data, {"search_space", "ga", "evaluator", "compare"})
        kwargs = {}
        if "search_space" in data:
            kwargs["space"] = SearchSpace.from_dict(data["search_space"])
        if "ga" in data:
            try:
                kwargs["ga"] = GaConfig.from_dict(data["ga"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad ga section: {exc}") from exc
        if "evaluator" in data:
            kwargs["evaluator"] = EvaluatorConfig.from_dict(data["evaluator"])
        if "compare" in data:
            kwargs["compare"] = CompareConfig.from_dict(data["compare"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "search_space": self.space.to_dict(),
            "ga": self.ga.to_dict(),
            "evaluator": self.evaluator.to_dict(),
            "compare": self.compare.to_dict(),
        }


def load_run_config(path: str | Path | None) -> RunConfig:
    """Parse a YAML run configuration; None or an empty file means defaults."""
    if path is None:
        return RunConfig()
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if data is None:
        return RunConfig()
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(data)
