"""Pipeline configuration, loaded from one JSON file.

Every section is optional; missing keys take the defaults below. Example::

    {
      "health_index": {"age_weight": 0.7, "age_reference": 40,
                       "condition_weights": {"enclosure": 0.1, "mechanical": 0.1,
                                             "electrical": 0.1}},
      "table": {"axis": "health_index", "step": 1.0},
      "grid": {"gammas": [2.5, 5], "deltas": [0.05, 0.10]},
      "split": {"train_fraction": 0.8, "seed": 42, "strata": 10},
      "policy": {"mode": "top_k", "k": 3},
      "mc": {"trials": 10000, "seed": 7},
      "forecast": {"avg_loss": null, "age_floor": 0.5},
      "synth": {"alpha": 20, "beta": 1.5, "population": 560,
                "observation_window": 40, "seed": 1}
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .dataset import DEFAULT_STRATA, HealthIndexConfig
from .ensemble import SelectionPolicy
from .errors import InvalidConfig
from .estimation import ShiftGrid
from .models import Axis


@dataclass(frozen=True)
class TableSettings:
    axis: Axis = Axis.AGE
    step: float = 1.0


@dataclass(frozen=True)
class SplitSettings:
    train_fraction: float = 0.8
    seed: int = 42
    strata: int = DEFAULT_STRATA


@dataclass(frozen=True)
class MonteCarloSettings:
    trials: int = 10_000
    seed: int = 0


@dataclass(frozen=True)
class ForecastSettings:
    avg_loss: float | None = None
    age_floor: float | None = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    health_index: HealthIndexConfig | None = None
    table: TableSettings = field(default_factory=TableSettings)
    grid: ShiftGrid = field(default_factory=ShiftGrid)
    split: SplitSettings = field(default_factory=SplitSettings)
    policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    mc: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    forecast: ForecastSettings = field(default_factory=ForecastSettings)
    synth: Mapping[str, Any] = field(default_factory=dict)

    @property
    def condition_names(self) -> list[str]:
        if self.table.axis is Axis.AGE or self.health_index is None:
            return []
        return self.health_index.condition_names

    def with_seed(self, seed: int | None) -> "PipelineConfig":
        """Copy with every seed replaced by ``seed`` (no-op for None)."""
        if seed is None:
            return self
        synth = dict(self.synth)
        if synth:
            synth["seed"] = seed
        return replace(self, split=replace(self.split, seed=seed),
                       mc=replace(self.mc, seed=seed), synth=synth)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        known = {"health_index", "table", "grid", "split", "policy", "mc", "forecast", "synth"}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown config section(s): {', '.join(sorted(unknown))}")
        try:
            hi = data.get("health_index")
            table = dict(data.get("table", {}))
            if "axis" in table:
                table["axis"] = Axis.parse(table["axis"])
            cfg = cls(
                health_index=HealthIndexConfig.from_dict(hi) if hi else None,
                table=TableSettings(**table),
                grid=ShiftGrid(**{k: tuple(v) for k, v in data.get("grid", {}).items()}),
                split=SplitSettings(**data.get("split", {})),
                policy=SelectionPolicy.from_dict(data.get("policy", {})),
                mc=MonteCarloSettings(**data.get("mc", {})),
                forecast=ForecastSettings(**data.get("forecast", {})),
                synth=dict(data.get("synth", {})),
            )
        except TypeError as exc:
            raise InvalidConfig(f"config: {exc}") from None
        if cfg.table.axis is Axis.HEALTH_INDEX and cfg.health_index is None:
            raise InvalidConfig("health_index axis requires a health_index section")
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return {
            "health_index": self.health_index.to_dict() if self.health_index else None,
            "table": {"axis": self.table.axis.value, "step": self.table.step},
            "grid": self.grid.to_dict(),
            "split": vars(self.split).copy(),
            "policy": self.policy.to_dict(),
            "mc": vars(self.mc).copy(),
            "forecast": vars(self.forecast).copy(),
            "synth": dict(self.synth),
        }


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: top level must be an object")
    return PipelineConfig.from_dict(data)
