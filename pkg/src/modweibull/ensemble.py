"""Score fitted models on held-out rows and blend the good ones.

The joint curve is the inverse-MSE weighted average of the selected members::

    F_joint(x) = sum_i w_i F_i(x),   w_i = (1 / mse_i) / sum_j (1 / mse_j)

A convex combination of clamped curves, so it stays in [0, 1] and is
non-decreasing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .dataset import FailureTable
from .errors import (
    EmptyTestSet,
    InvalidConfig,
    NoSuitableModels,
    ZeroMseMember,
)
from .models import Axis, WeibullModel, cdf

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ScoredModel:
    model: WeibullModel
    mse: float
    rank: int
    candidate_index: int = 0


class SelectionMode(str, Enum):
    TOP_K = "top_k"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class SelectionPolicy:
    mode: SelectionMode = SelectionMode.TOP_K
    k: int = 3
    max_mse: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", SelectionMode(self.mode))
        if self.mode is SelectionMode.TOP_K and self.k < 1:
            raise InvalidConfig("top-k selection needs k >= 1")
        if self.mode is SelectionMode.THRESHOLD and not (self.max_mse and self.max_mse > 0):
            raise InvalidConfig("threshold selection needs max_mse > 0")

    @classmethod
    def top_k(cls, k: int = 3) -> "SelectionPolicy":
        return cls(SelectionMode.TOP_K, k=k)

    @classmethod
    def threshold(cls, max_mse: float) -> "SelectionPolicy":
        return cls(SelectionMode.THRESHOLD, max_mse=max_mse)

    def to_dict(self) -> dict[str, Any]:
        if self.mode is SelectionMode.TOP_K:
            return {"mode": self.mode.value, "k": self.k}
        return {"mode": self.mode.value, "max_mse": self.max_mse}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SelectionPolicy":
        try:
            mode = SelectionMode(data.get("mode", "top_k"))
        except ValueError:
            raise InvalidConfig(f"unknown selection mode {data.get('mode')!r}") from None
        if mode is SelectionMode.TOP_K:
            return cls.top_k(int(data.get("k", 3)))
        return cls.threshold(float(data.get("max_mse", 0.0)))


@dataclass(frozen=True)
class JointModel:
    """Weighted blend of models on a common axis. Weights are positive and sum to 1."""

    models: tuple[WeibullModel, ...]
    weights: tuple[float, ...]
    axis: Axis
    mse: tuple[float, ...] = ()
    provenance: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "mse", tuple(float(m) for m in self.mse))
        object.__setattr__(self, "axis", Axis.parse(self.axis))
        if not self.models or len(self.models) != len(self.weights):
            raise InvalidConfig("joint model needs one weight per member, at least one member")
        if any(not w > 0 for w in self.weights):
            raise InvalidConfig("joint model weights must be > 0")
        if abs(sum(self.weights) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidConfig(f"joint model weights sum to {sum(self.weights)!r}, not 1")
        if any(m.axis is not self.axis for m in self.models):
            raise InvalidConfig("joint model members must share the joint axis")

    @property
    def members(self) -> list[tuple[WeibullModel, float]]:
        return list(zip(self.models, self.weights))

    def cdf(self, x):
        return joint_cdf(self, x)

    def to_dict(self) -> dict[str, Any]:
        mse = self.mse or (None,) * len(self.models)
        return {
            "axis": self.axis.value,
            "members": [
                {"model": m.to_dict(), "weight": w, "mse": e}
                for m, w, e in zip(self.models, self.weights, mse)
            ],
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "JointModel":
        try:
            members = data["members"]
            models = [WeibullModel.from_dict(m["model"]) for m in members]
            weights = [float(m["weight"]) for m in members]
            mse = [m.get("mse") for m in members]
            return cls(
                tuple(models), tuple(weights), Axis.parse(data["axis"]),
                tuple(mse) if all(e is not None for e in mse) else (),
                data.get("provenance", {}),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"malformed joint model: {exc}") from None


def mse(model, test: FailureTable) -> float:
    """Mean squared error of ``model.cdf`` on the unflagged rows of ``test``."""
    rows = test.usable
    if len(rows) == 0:
        raise EmptyTestSet("test table has no unflagged rows")
    err = rows.f_hat - np.asarray(model.cdf(rows.x), dtype=float)
    return float(np.mean(err * err))


def score(models: Sequence[WeibullModel], test: FailureTable) -> list[ScoredModel]:
    """MSE of each model on the test rows, ranked ascending; ties keep input order."""
    values = [mse(m, test) for m in models]
    order = sorted(range(len(models)), key=lambda i: values[i])  # sorted() is stable
    return [ScoredModel(models[i], values[i], rank, i) for rank, i in enumerate(order, start=1)]


def select(scored: Sequence[ScoredModel], policy: SelectionPolicy) -> list[ScoredModel]:
    """Suitable subset: the ``k`` best ranks, or every model under ``max_mse``."""
    if not scored:
        raise NoSuitableModels("nothing to select from")
    ranked = sorted(scored, key=lambda s: s.rank)
    if policy.mode is SelectionMode.TOP_K:
        return ranked[: policy.k]
    chosen = [s for s in ranked if s.mse < policy.max_mse]
    if not chosen:
        best = ranked[0].mse
        raise NoSuitableModels(
            f"no model has mse < {policy.max_mse:g} (best is {best:.6g})")
    return chosen


def combine(selected: Sequence[ScoredModel], provenance: Mapping[str, Any] | None = None) -> JointModel:
    """Inverse-MSE weighted joint model.

    Raises:
        ZeroMseMember: a member with zero test error would need infinite weight;
            select it alone instead.
    """
    if not selected:
        raise NoSuitableModels("cannot combine an empty selection")
    if len(selected) == 1:
        only = selected[0]
        return JointModel((only.model,), (1.0,), only.model.axis, (only.mse,), provenance or {})
    for s in selected:
        if not s.mse > 0:
            raise ZeroMseMember(
                f"{s.model.describe()} has mse {s.mse}; select it alone (k=1)")
    inv = np.array([1.0 / s.mse for s in selected])
    weights = inv / inv.sum()
    return JointModel(
        tuple(s.model for s in selected),
        tuple(weights.tolist()),
        selected[0].model.axis,
        tuple(s.mse for s in selected),
        provenance or {},
    )


def joint_cdf(joint: JointModel, x):
    """Weighted sum of member CDFs."""
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape)
    for model, weight in zip(joint.models, joint.weights):
        total = total + weight * cdf(model, x)
    total = np.clip(total, 0.0, 1.0)
    return total if total.ndim else float(total)


def ranking_table(scored: Sequence[ScoredModel]) -> str:
    """Plain-text table: ID, model description, MSE, ranking (in candidate order)."""
    rows = sorted(scored, key=lambda s: s.candidate_index)
    width = max([len("Model Description")] + [len(s.model.describe()) for s in rows])
    lines = [f"{'ID':>3}  {'Model Description':<{width}}  {'MSE':>10}  {'Ranking':>7}"]
    for s in rows:
        lines.append(f"{s.candidate_index + 1:>3}  {s.model.describe():<{width}}  "
                     f"{s.mse:>10.6f}  {s.rank:>7d}")
    return "\n".join(lines)
