"""Failure forecasts for an asset population from a joint model."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Sequence, TextIO

import numpy as np

from .ensemble import JointModel, joint_cdf
from .errors import InvalidConfig, MalformedRow, MissingColumn, MissingLoss, ZeroAge
from .models import Axis

HEALTH_CAP = 100.0
MC_PERCENTILES = (5, 50, 95)


@dataclass(frozen=True)
class Horizon:
    """Forecast window, in years from today: ``[dt1, dt2]``."""

    dt1: float
    dt2: float

    def __post_init__(self):
        if self.dt1 < 0:
            raise InvalidConfig(f"dt1 must be >= 0, got {self.dt1}")
        if self.dt2 < self.dt1:
            raise InvalidConfig(f"dt2 ({self.dt2}) must be >= dt1 ({self.dt1})")


@dataclass(frozen=True)
class PopulationAsset:
    asset_id: str
    age: float
    health_index: float | None = None
    loss: float | None = None


@dataclass(frozen=True)
class PopulationSnapshot:
    assets: tuple[PopulationAsset, ...]
    avg_loss: float | None = None

    def __len__(self) -> int:
        return len(self.assets)

    def losses(self) -> np.ndarray:
        """Per-asset loss, falling back to ``avg_loss``."""
        out = np.empty(len(self.assets))
        for i, a in enumerate(self.assets):
            if a.loss is not None:
                out[i] = a.loss
            elif self.avg_loss is not None:
                out[i] = self.avg_loss
            else:
                raise MissingLoss(f"asset {a.asset_id} has no loss and no avg_loss is set",
                                  a.asset_id)
        return out


@dataclass
class ForecastReport:
    asset_ids: list[str]
    probabilities: np.ndarray
    n_f: float
    horizon: Horizon
    consequence: float | None = None
    consequence_mean: float | None = None
    mc_percentiles: dict[int, float] = field(default_factory=dict)
    trials: int | None = None
    seed: int | None = None

    @property
    def per_asset(self) -> list[tuple[str, float]]:
        return list(zip(self.asset_ids, self.probabilities.tolist()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "horizon": {"dt1": self.horizon.dt1, "dt2": self.horizon.dt2},
            "n_assets": len(self.asset_ids),
            "n_f": self.n_f,
            "consequence": self.consequence,
            "consequence_mean": self.consequence_mean,
            "mc_percentiles": {str(k): v for k, v in self.mc_percentiles.items()},
            "trials": self.trials,
            "seed": self.seed,
        }

    def write_per_asset(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["asset_id", "p"])
        for asset_id, p in self.per_asset:
            writer.writerow([asset_id, repr(p)])


def progress_health(h: float, age: float, dt: float) -> float:
    """Health index ``dt`` years ahead, scaled with age and capped at 100.

    ``h * (age + dt) / age``. Undefined for a zero-age asset with nonzero
    health index, which raises :class:`ZeroAge`.
    """
    if dt < 0:
        raise InvalidConfig(f"dt must be >= 0, got {dt}")
    if dt == 0 or h == 0:
        return float(h)
    if not age > 0:
        raise ZeroAge(f"cannot progress health index {h} of an asset aged {age}")
    return min(h * (age + dt) / age, HEALTH_CAP)


def _window_edges(joint: JointModel, h: float | None, age: float, horizon: Horizon) -> tuple[float, float]:
    if joint.axis is Axis.AGE:
        return age + horizon.dt1, age + horizon.dt2
    if h is None:
        raise InvalidConfig("health-index forecast needs each asset's health index")
    return progress_health(h, age, horizon.dt1), progress_health(h, age, horizon.dt2)


def asset_probability(joint: JointModel, h: float | None, age: float, horizon: Horizon) -> float:
    """Probability that one asset fails inside the horizon.

    Difference of the joint curve at the asset's index at the end and start
    of the window; on the age axis the index is simply age plus elapsed time.
    """
    if horizon.dt1 == horizon.dt2:
        return 0.0
    lo, hi = _window_edges(joint, h, age, horizon)
    p = joint_cdf(joint, hi) - joint_cdf(joint, lo)
    return min(max(p, 0.0), 1.0)


def population_probabilities(joint: JointModel, pop: PopulationSnapshot,
                             horizon: Horizon) -> np.ndarray:
    out = np.empty(len(pop))
    for i, a in enumerate(pop.assets):
        try:
            out[i] = asset_probability(joint, a.health_index, a.age, horizon)
        except ZeroAge as exc:
            raise ZeroAge(f"asset {a.asset_id}: {exc}", a.asset_id) from None
    return out


def population_forecast(joint: JointModel, pop: PopulationSnapshot, horizon: Horizon) -> ForecastReport:
    """Per-asset probabilities and the expected failure count."""
    if len(pop) == 0:
        raise InvalidConfig("population snapshot is empty")
    p = population_probabilities(joint, pop, horizon)
    n_f = math.fsum(p.tolist())
    report = ForecastReport([a.asset_id for a in pop.assets], p, n_f, horizon)
    if pop.avg_loss is not None:
        report.consequence = consequence(report, pop.avg_loss)
    return report


def consequence(report: ForecastReport | float, avg_loss: float) -> float:
    """Expected failures times average loss per failure."""
    if avg_loss < 0:
        raise InvalidConfig("avg_loss must be >= 0")
    n_f = report.n_f if isinstance(report, ForecastReport) else float(report)
    return n_f * avg_loss


def nearest_rank(sorted_values: np.ndarray, pct: float) -> float:
    rank = max(1, math.ceil(pct / 100.0 * sorted_values.size))
    return float(sorted_values[rank - 1])


def simulate_totals(p: np.ndarray, losses: np.ndarray, trials: int, seed: int) -> np.ndarray:
    """Total loss per trial with independent Bernoulli failures.

    Trial ``t`` draws from its own generator seeded by ``(seed, t)``, so
    results do not depend on execution order.
    """
    totals = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        fails = rng.random(p.size) < p
        totals[t] = losses @ fails
    return totals


def monte_carlo_consequence(joint: JointModel, pop: PopulationSnapshot, horizon: Horizon,
                            trials: int = 10_000, seed: int = 0,
                            percentiles: Sequence[int] = MC_PERCENTILES) -> ForecastReport:
    """Forecast plus a simulated distribution of total loss over the horizon.

    Raises:
        MissingLoss: an asset has no loss value and ``pop.avg_loss`` is unset.
    """
    if trials < 1:
        raise InvalidConfig("trials must be >= 1")
    losses = pop.losses()
    report = population_forecast(joint, pop, horizon)
    totals = np.sort(simulate_totals(report.probabilities, losses, trials, seed))
    report.consequence_mean = float(totals.mean())
    report.mc_percentiles = {int(q): nearest_rank(totals, q) for q in percentiles}
    report.trials = trials
    report.seed = seed
    return report


def parse_population(stream: TextIO | str, avg_loss: float | None = None,
                     age_floor: float | None = None) -> PopulationSnapshot:
    """Read ``asset_id, age[, health_index][, loss]`` rows.

    ``age_floor``, when set, raises ages below it to the floor so that the
    health-index progression stays defined for brand-new assets.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise MissingColumn("population file has no header row")
    lookup = {h.strip().lower(): i for i, h in enumerate(header)}
    for required in ("asset_id", "age"):
        if required not in lookup:
            raise MissingColumn(f"population file lacks column {required!r}")

    def optional(row, name, line):
        i = lookup.get(name)
        if i is None or i >= len(row) or not row[i].strip():
            return None
        try:
            return float(row[i])
        except ValueError:
            raise MalformedRow(line, f"{name} {row[i]!r} is not a number") from None

    assets = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        line = reader.line_num
        age = optional(row, "age", line)
        if age is None or age < 0:
            raise MalformedRow(line, f"invalid age in row {row!r}")
        if age_floor is not None:
            age = max(age, age_floor)
        h = optional(row, "health_index", line)
        if h is not None and not 0.0 <= h <= 100.0:
            raise MalformedRow(line, f"health_index {h} outside [0, 100]")
        loss = optional(row, "loss", line)
        if loss is not None and loss < 0:
            raise MalformedRow(line, f"negative loss {loss}")
        assets.append(PopulationAsset(row[lookup["asset_id"]].strip(), age, h, loss))
    return PopulationSnapshot(tuple(assets), avg_loss)


def write_population(pop: PopulationSnapshot, stream: TextIO) -> None:
    has_h = any(a.health_index is not None for a in pop.assets)
    has_loss = any(a.loss is not None for a in pop.assets)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["asset_id", "age"] + (["health_index"] if has_h else [])
                    + (["loss"] if has_loss else []))
    for a in pop.assets:
        row = [a.asset_id, f"{a.age:.6g}"]
        if has_h:
            row.append("" if a.health_index is None else f"{a.health_index:.6g}")
        if has_loss:
            row.append("" if a.loss is None else f"{a.loss:g}")
        writer.writerow(row)
