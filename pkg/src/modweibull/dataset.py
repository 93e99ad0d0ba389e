"""Asset operation-status data: ingestion, health index, empirical failure tables.

The empirical cumulative failure probability at index value ``x`` is::

    f_hat(x) = N_f(x) / (N_f(x) + N_w(x))

where ``N_f`` counts failed assets with index <= x and ``N_w`` counts working
assets with index > x. The same orientation is used for the age axis and the
health-index axis.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidConfig,
    InvalidStatus,
    MalformedRow,
    MissingColumn,
    NegativeAge,
    TooFewRows,
    UnknownCondition,
)
from .models import Axis

DEFAULT_LEVEL_SCORES = {"Good": 0.0, "Medium": 50.0, "Poor": 100.0}
DEFAULT_STRATA = 10
REQUIRED_COLUMNS = ("asset_id", "age", "status")


class Status(str, Enum):
    WORKING = "Working"
    FAILED = "Failed"


@dataclass(frozen=True)
class ConditionRating:
    """One condition attribute: a level name (Good/Medium/Poor) or a 0-100 score."""

    name: str
    level: str | float

    def score(self, level_scores: Mapping[str, float] = DEFAULT_LEVEL_SCORES) -> float:
        if isinstance(self.level, str):
            for key, value in level_scores.items():
                if key.lower() == self.level.lower():
                    return float(value)
            raise UnknownCondition(f"condition {self.name!r}: no score for level {self.level!r}")
        return float(self.level)


@dataclass(frozen=True)
class AssetRecord:
    asset_id: str
    age: float
    status: Status
    conditions: tuple[ConditionRating, ...] = ()

    @property
    def failed(self) -> bool:
        return self.status is Status.FAILED


@dataclass(frozen=True)
class HealthIndexConfig:
    """Weights and normalization for the 0-100 health index.

    ``age_weight`` plus all ``condition_weights`` must sum to one. Age is
    normalized as ``100 * min(age / age_reference, 1)``.
    """

    age_weight: float = 1.0
    condition_weights: Mapping[str, float] = field(default_factory=dict)
    age_reference: float = 100.0
    level_scores: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_LEVEL_SCORES))

    def __post_init__(self):
        weights = [self.age_weight, *self.condition_weights.values()]
        if any(w < 0 for w in weights):
            raise InvalidConfig("health index weights must be >= 0")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise InvalidConfig(f"health index weights must sum to 1, got {sum(weights)!r}")
        if not self.age_reference > 0:
            raise InvalidConfig("age_reference must be > 0")
        for key, value in self.level_scores.items():
            if not 0.0 <= value <= 100.0:
                raise InvalidConfig(f"level score for {key!r} outside [0, 100]: {value}")

    @property
    def condition_names(self) -> list[str]:
        return list(self.condition_weights)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HealthIndexConfig":
        kwargs = dict(data)
        if "level_scores" in kwargs:
            kwargs["level_scores"] = {**DEFAULT_LEVEL_SCORES, **kwargs["level_scores"]}
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise InvalidConfig(f"health_index config: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "age_weight": self.age_weight,
            "condition_weights": dict(self.condition_weights),
            "age_reference": self.age_reference,
            "level_scores": dict(self.level_scores),
        }


@dataclass(frozen=True)
class FailureTable:
    """Ordered ``(x, f_hat)`` rows on one axis.

    ``flagged`` marks rows whose count denominator was zero; they carry
    ``f_hat = 0`` and are skipped by fitting and scoring.
    """

    x: np.ndarray
    f_hat: np.ndarray
    axis: Axis = Axis.AGE
    flagged: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        f = np.asarray(self.f_hat, dtype=float).reshape(-1)
        flagged = (np.zeros(x.shape, dtype=bool) if self.flagged is None
                   else np.asarray(self.flagged, dtype=bool).reshape(-1))
        if not (x.shape == f.shape == flagged.shape):
            raise InvalidConfig("x, f_hat and flagged must have equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise InvalidConfig("table rows must be strictly increasing in x")
        if np.any((f < 0) | (f > 1)):
            raise InvalidConfig("f_hat must lie in [0, 1]")
        for name, arr in (("x", x), ("f_hat", f), ("flagged", flagged)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "axis", Axis.parse(self.axis))

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def usable(self) -> "FailureTable":
        """The unflagged rows only."""
        keep = ~self.flagged
        return FailureTable(self.x[keep], self.f_hat[keep], self.axis)

    def take(self, idx) -> "FailureTable":
        idx = np.sort(np.asarray(idx, dtype=int))
        return FailureTable(self.x[idx], self.f_hat[idx], self.axis, self.flagged[idx])

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.f_hat.tolist()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "axis": self.axis.value,
            "x": self.x.tolist(),
            "f_hat": self.f_hat.tolist(),
            "flagged": self.flagged.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FailureTable":
        return cls(data["x"], data["f_hat"], Axis.parse(data["axis"]), data.get("flagged"))


@dataclass(frozen=True)
class SplitTable:
    train: FailureTable
    test: FailureTable
    seed: int
    train_fraction: float
    strata: int = DEFAULT_STRATA

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "strata": self.strata,
            "train": self.train.to_dict(),
            "test": self.test.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SplitTable":
        return cls(
            FailureTable.from_dict(data["train"]),
            FailureTable.from_dict(data["test"]),
            int(data["seed"]),
            float(data["train_fraction"]),
            int(data.get("strata", DEFAULT_STRATA)),
        )


# ---------------------------------------------------------------------------
# ingestion

def _parse_level(raw: str, name: str, line: int) -> str | float:
    text = raw.strip()
    try:
        value = float(text)
    except ValueError:
        if not text:
            raise MalformedRow(line, f"empty value for condition {name!r}") from None
        return text
    if not 0.0 <= value <= 100.0:
        raise MalformedRow(line, f"condition {name!r} score {value} outside [0, 100]")
    return value


def _parse_status(raw: str, line: int) -> Status:
    text = raw.strip().lower()
    for status in Status:
        if status.value.lower() == text:
            return status
    raise InvalidStatus(line, f"unknown status {raw!r} (expected Working or Failed)")


def parse_dataset(stream: TextIO | str, schema: Sequence[str] = ()) -> list[AssetRecord]:
    """Read a comma-separated asset status file.

    Args:
        stream: open text stream, or the file content as a string.
        schema: condition column names to pick up; other extra columns
            are ignored.

    Returns:
        One :class:`AssetRecord` per data row, in file order.

    Raises:
        MissingColumn: header lacks a required or named condition column.
        MalformedRow: a row has the wrong width or an unparseable value.
        InvalidStatus: status other than Working/Failed.
        NegativeAge: age below zero.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise MissingColumn("input has no header row")
    header = [h.strip() for h in header]
    lookup = {h.lower(): i for i, h in enumerate(header)}
    missing = [c for c in (*REQUIRED_COLUMNS, *schema) if c.lower() not in lookup]
    if missing:
        raise MissingColumn(f"missing column(s): {', '.join(missing)}")
    col = {c: lookup[c.lower()] for c in (*REQUIRED_COLUMNS, *schema)}

    records: list[AssetRecord] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
        try:
            age = float(row[col["age"]])
        except ValueError:
            raise MalformedRow(line, f"age {row[col['age']]!r} is not a number") from None
        if not math.isfinite(age):
            raise MalformedRow(line, f"age {age} is not finite")
        if age < 0:
            raise NegativeAge(line, f"negative age {age}")
        status = _parse_status(row[col["status"]], line)
        conditions = tuple(
            ConditionRating(name, _parse_level(row[col[name]], name, line)) for name in schema
        )
        records.append(AssetRecord(row[col["asset_id"]].strip(), age, status, conditions))
    return records


def write_dataset(records: Iterable[AssetRecord], stream: TextIO) -> None:
    records = list(records)
    names = [c.name for c in records[0].conditions] if records else []
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["asset_id", "age", "status", *names])
    for rec in records:
        levels = [c.level if isinstance(c.level, str) else f"{c.level:g}" for c in rec.conditions]
        writer.writerow([rec.asset_id, f"{rec.age:.6g}", rec.status.value, *levels])


# ---------------------------------------------------------------------------
# health index

def normalized_age(age: float, age_reference: float) -> float:
    return 100.0 * min(age / age_reference, 1.0)


def health_index(record: AssetRecord, config: HealthIndexConfig) -> float:
    """Weighted 0-100 composite of normalized age and condition scores."""
    total = config.age_weight * normalized_age(record.age, config.age_reference)
    for rating in record.conditions:
        if rating.name not in config.condition_weights:
            raise UnknownCondition(
                f"asset {record.asset_id}: condition {rating.name!r} has no configured weight")
        total += config.condition_weights[rating.name] * rating.score(config.level_scores)
    # guard against 100.00000000000001 from float summation
    return min(max(total, 0.0), 100.0)


def index_values(records: Sequence[AssetRecord], axis: Axis | str,
                 config: HealthIndexConfig | None = None) -> np.ndarray:
    axis = Axis.parse(axis)
    if axis is Axis.AGE:
        return np.array([r.age for r in records], dtype=float)
    if config is None:
        raise InvalidConfig("health-index axis requires a HealthIndexConfig")
    return np.array([health_index(r, config) for r in records], dtype=float)


def default_grid(values: np.ndarray, step: float = 1.0) -> np.ndarray:
    """0, step, 2*step, ... up to the smallest grid point covering max(values)."""
    if step <= 0:
        raise InvalidConfig("grid step must be > 0")
    top = float(np.max(values)) if len(values) else 0.0
    n = int(math.ceil(top / step - 1e-9))
    return step * np.arange(n + 1, dtype=float)


def build_failure_table(records: Sequence[AssetRecord], axis: Axis | str = Axis.AGE,
                        config: HealthIndexConfig | None = None,
                        grid: Sequence[float] | None = None, step: float = 1.0) -> FailureTable:
    """Empirical cumulative failure probability on a grid of index values.

    Rows where no asset contributes to either count are emitted with
    ``f_hat = 0`` and flagged.
    """
    if not records:
        raise EmptyDataset("dataset has no records")
    axis = Axis.parse(axis)
    values = index_values(records, axis, config)
    grid = default_grid(values, step) if grid is None else np.asarray(grid, dtype=float)
    if grid.size and np.any(np.diff(grid) <= 0):
        raise InvalidConfig("grid must be strictly increasing")

    failed = np.array([r.failed for r in records])
    fail_sorted = np.sort(values[failed])
    work_sorted = np.sort(values[~failed])
    n_f = np.searchsorted(fail_sorted, grid, side="right")
    n_w = work_sorted.size - np.searchsorted(work_sorted, grid, side="right")
    denom = n_f + n_w
    flagged = denom == 0
    f_hat = np.divide(n_f, denom, out=np.zeros(grid.shape), where=~flagged)
    return FailureTable(grid, f_hat, axis, flagged)


def write_table(table: FailureTable, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([table.axis.value, "f_hat", "flagged"])
    for x, f, flag in zip(table.x, table.f_hat, table.flagged):
        writer.writerow([repr(float(x)), repr(float(f)), int(flag)])


def read_table(stream: TextIO | str) -> FailureTable:
    """Inverse of :func:`write_table`; a missing ``flagged`` column means unflagged."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = next(reader, None)
    if not header or len(header) < 2:
        raise MissingColumn("table needs an index column and an f_hat column")
    axis = Axis.parse(header[0])
    xs, fs, flags = [], [], []
    for row in reader:
        if not row:
            continue
        try:
            xs.append(float(row[0]))
            fs.append(float(row[1]))
            flags.append(bool(int(row[2])) if len(row) > 2 else False)
        except (ValueError, IndexError):
            raise MalformedRow(reader.line_num, f"bad table row {row!r}") from None
    return FailureTable(xs, fs, axis, flags)


# ---------------------------------------------------------------------------
# train/test split

def _apportion(sizes: np.ndarray, total: int, rng: np.random.Generator) -> np.ndarray:
    """Integer quotas per stratum summing to ``total``, proportional to ``sizes``.

    Largest-remainder rounding; ties between equal remainders are broken by
    the seeded generator so no stratum is systematically favoured.
    """
    exact = sizes * (total / sizes.sum())
    quota = np.floor(exact).astype(int)
    short = total - quota.sum()
    if short:
        remainder = exact - quota
        jitter = rng.random(sizes.size)
        order = np.lexsort((jitter, -remainder))
        quota[order[:short]] += 1
    return quota


def split_table(table: FailureTable, train_fraction: float = 0.8, seed: int = 0,
                strata: int = DEFAULT_STRATA) -> SplitTable:
    """Stratified train/test partition over the x-range.

    The x-range is cut into ``strata`` equal-width bins and each bin
    contributes its proportional share of training rows, drawn without
    replacement. The overall train count is ``round(train_fraction * n)``,
    kept within ``[1, n - 1]`` so neither part is empty.
    """
    n = len(table)
    if n < 5:
        raise TooFewRows(f"need at least 5 rows to split, got {n}")
    if not 0.0 < train_fraction < 1.0:
        raise InvalidConfig(f"train_fraction must be in (0, 1), got {train_fraction}")
    if strata < 1:
        raise InvalidConfig("strata must be >= 1")
    rng = np.random.default_rng(seed)

    lo, hi = float(table.x[0]), float(table.x[-1])
    width = (hi - lo) / strata
    bins = np.minimum(((table.x - lo) / width).astype(int), strata - 1) if width > 0 \
        else np.zeros(n, dtype=int)
    members = [np.flatnonzero(bins == b) for b in range(strata)]
    members = [m for m in members if m.size]
    sizes = np.array([m.size for m in members])

    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    quotas = _apportion(sizes, n_train, rng)
    train_idx = np.concatenate([
        rng.choice(m, size=q, replace=False) for m, q in zip(members, quotas)
    ])
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    return SplitTable(
        train=table.take(np.flatnonzero(mask)),
        test=table.take(np.flatnonzero(~mask)),
        seed=seed,
        train_fraction=train_fraction,
        strata=strata,
    )
