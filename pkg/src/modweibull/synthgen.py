"""Synthetic asset populations with known Weibull ground truth.

Each asset has been in service for ``U ~ uniform(0, window)`` years and has a
latent failure time ``T`` drawn from the truth model. It is recorded as
Failed at age ``T`` when ``T <= U``, otherwise Working at age ``U``. This is
the right-censored mix of working and failed assets an operation-status
dataset contains.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .dataset import AssetRecord, ConditionRating, FailureTable, HealthIndexConfig, Status, health_index
from .errors import InvalidConfig
from .forecast import PopulationAsset, PopulationSnapshot
from .models import Axis, WeibullModel, cdf, inverse_cdf

CONDITION_NAMES = ("enclosure", "mechanical", "electrical")
_LEVELS = ("Good", "Medium", "Poor")


@dataclass(frozen=True)
class SynthSpec:
    truth: WeibullModel
    population: int
    observation_window: float
    seed: int = 0
    condition_noise: float = 0.15
    conditions: Sequence[str] = CONDITION_NAMES

    def __post_init__(self):
        if self.truth.delta != 0:
            raise InvalidConfig("synthetic truth must be a proper distribution (delta = 0)")
        if self.population < 1:
            raise InvalidConfig("population must be >= 1")
        if not self.observation_window > 0:
            raise InvalidConfig("observation_window must be > 0")
        if self.condition_noise < 0:
            raise InvalidConfig("condition_noise must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SynthSpec":
        data = dict(data)
        try:
            truth = WeibullModel.shifted(
                float(data.pop("alpha")), float(data.pop("beta")),
                float(data.pop("gamma", 0.0)), 0.0, Axis.AGE)
            if "conditions" in data:
                data["conditions"] = tuple(data["conditions"])
            return cls(truth=truth, **data)
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"synth spec: {exc}") from None


def _condition_level(score: float) -> str:
    return _LEVELS[min(int(score // (100.0 / 3.0)), 2)]


def _synth_asset(spec: SynthSpec, i: int) -> AssetRecord:
    rng = np.random.default_rng([spec.seed, i])
    elapsed = rng.uniform(0.0, spec.observation_window)
    lifetime = inverse_cdf(spec.truth, rng.random())
    failed = lifetime <= elapsed
    age = lifetime if failed else elapsed
    base = 100.0 * age / spec.observation_window
    noise = rng.normal(0.0, spec.condition_noise * 100.0, size=len(spec.conditions))
    conditions = tuple(
        ConditionRating(name, _condition_level(float(np.clip(base + e, 0.0, 100.0))))
        for name, e in zip(spec.conditions, noise)
    )
    return AssetRecord(str(i + 1), float(age), Status.FAILED if failed else Status.WORKING,
                       conditions)


def generate_population(spec: SynthSpec) -> list[AssetRecord]:
    """Seeded synthetic dataset; asset ``i`` draws from the stream ``(seed, i)``.

    Condition ratings are Good/Medium/Poor levels of a score that rises with
    age relative to the window, plus Gaussian noise of ``condition_noise * 100``.
    """
    return [_synth_asset(spec, i) for i in range(spec.population)]


def generate_snapshot(spec: SynthSpec, size: int, config: HealthIndexConfig | None = None,
                      avg_loss: float | None = None, loss: float | None = None,
                      age_floor: float = 0.5, max_draws: int = 10_000_000) -> PopulationSnapshot:
    """``size`` in-service assets drawn from the same per-asset streams.

    Assets are generated in index order and failed ones skipped until
    ``size`` working assets are collected; ``spec.population`` is ignored.
    """
    records: list[AssetRecord] = []
    i = 0
    while len(records) < size:
        if i >= max_draws:
            raise InvalidConfig(f"only {len(records)} working assets in {max_draws} draws")
        rec = _synth_asset(spec, i)
        if not rec.failed:
            records.append(rec)
        i += 1
    return snapshot_from_records(records, config, avg_loss, age_floor, loss)


def generate_exact_table(truth: WeibullModel, grid: Sequence[float]) -> FailureTable:
    """Noise-free ``(x, cdf(x))`` rows."""
    x = np.asarray(grid, dtype=float)
    return FailureTable(x, np.asarray(cdf(truth, x), dtype=float).reshape(x.shape), truth.axis)


def snapshot_from_records(records: Sequence[AssetRecord], config: HealthIndexConfig | None = None,
                          avg_loss: float | None = None, age_floor: float = 0.5,
                          loss: float | None = None) -> PopulationSnapshot:
    """Current-state snapshot of working assets, ready for forecasting.

    Ages are floored at ``age_floor`` so health-index progression is defined.
    """
    assets = []
    for rec in records:
        if rec.failed:
            continue
        h = health_index(rec, config) if config is not None else None
        assets.append(PopulationAsset(rec.asset_id, max(rec.age, age_floor), h, loss))
    return PopulationSnapshot(tuple(assets), avg_loss)
