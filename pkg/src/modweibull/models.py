"""Standard, X-shift, Y-shift and XY-shift Weibull models.

All four forms share one cumulative curve::

    F(x) = 1 + delta - exp(-((x - gamma) / alpha) ** beta)

with ``gamma`` moving the curve along the index axis (a failure-free or
energization-delay period) and ``delta`` moving it up or down (infant
mortality, or delayed onset when negative). Below ``gamma`` the curve is held
at ``delta``, and the result is clamped into ``[0, 1]`` at evaluation time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .errors import ImproperDistribution, InvalidConfig


class Axis(str, Enum):
    AGE = "age"
    HEALTH_INDEX = "health_index"

    @classmethod
    def parse(cls, value: "str | Axis") -> "Axis":
        if isinstance(value, Axis):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"age": cls.AGE, "health_index": cls.HEALTH_INDEX,
                   "healthindex": cls.HEALTH_INDEX, "hi": cls.HEALTH_INDEX}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidConfig(f"unknown axis {value!r}") from None


class ModelForm(str, Enum):
    STANDARD = "standard"
    XSHIFT = "x_shift"
    YSHIFT = "y_shift"
    XYSHIFT = "xy_shift"

    @classmethod
    def for_shifts(cls, gamma: float, delta: float) -> "ModelForm":
        """Smallest form that can carry the given shifts."""
        if gamma == 0 and delta == 0:
            return cls.STANDARD
        if delta == 0:
            return cls.XSHIFT
        if gamma == 0:
            return cls.YSHIFT
        return cls.XYSHIFT


@dataclass(frozen=True)
class WeibullModel:
    """An immutable parameter set for one of the four model forms.

    Args:
        form: model family tag.
        alpha: scale, > 0.
        beta: shape, > 0.
        gamma: horizontal shift in index units, >= 0.
        delta: vertical shift (probability offset), in (-1, 1).
        axis: the index axis the model was fitted on.
    """

    form: ModelForm
    alpha: float
    beta: float
    gamma: float = 0.0
    delta: float = 0.0
    axis: Axis = Axis.AGE

    def __post_init__(self):
        object.__setattr__(self, "form", ModelForm(self.form))
        object.__setattr__(self, "axis", Axis.parse(self.axis))
        for name in ("alpha", "beta", "gamma", "delta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidConfig(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.alpha <= 0 or self.beta <= 0:
            raise InvalidConfig(f"alpha and beta must be > 0 (alpha={self.alpha}, beta={self.beta})")
        if self.gamma < 0:
            raise InvalidConfig(f"gamma must be >= 0, got {self.gamma}")
        if not -1.0 < self.delta < 1.0:
            raise InvalidConfig(f"delta must lie in (-1, 1), got {self.delta}")
        form = self.form
        if form is ModelForm.STANDARD and (self.gamma != 0 or self.delta != 0):
            raise InvalidConfig("standard form requires gamma = 0 and delta = 0")
        if form is ModelForm.XSHIFT and self.delta != 0:
            raise InvalidConfig("x-shift form requires delta = 0")
        if form is ModelForm.YSHIFT and self.gamma != 0:
            raise InvalidConfig("y-shift form requires gamma = 0")

    @classmethod
    def standard(cls, alpha: float, beta: float, axis: Axis | str = Axis.AGE) -> "WeibullModel":
        return cls(ModelForm.STANDARD, alpha, beta, 0.0, 0.0, axis)

    @classmethod
    def shifted(cls, alpha: float, beta: float, gamma: float = 0.0, delta: float = 0.0,
                axis: Axis | str = Axis.AGE) -> "WeibullModel":
        return cls(ModelForm.for_shifts(gamma, delta), alpha, beta, gamma, delta, axis)

    def cdf(self, x):
        return cdf(self, x)

    def pdf(self, x):
        return pdf(self, x)

    def describe(self) -> str:
        """Short human label, e.g. ``XY-Shift(gamma=2.5, delta=0.05)``."""
        if self.form is ModelForm.STANDARD:
            return "Two-parameter"
        if self.form is ModelForm.XSHIFT:
            return f"X-Shift(gamma={self.gamma:g})"
        if self.form is ModelForm.YSHIFT:
            return f"Y-Shift(delta={self.delta:g})"
        return f"XY-Shift(gamma={self.gamma:g}, delta={self.delta:g})"

    def to_dict(self) -> dict[str, Any]:
        return {
            "form": self.form.value,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
            "axis": self.axis.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "WeibullModel":
        try:
            return cls(
                form=ModelForm(data["form"]),
                alpha=data["alpha"],
                beta=data["beta"],
                gamma=data.get("gamma", 0.0),
                delta=data.get("delta", 0.0),
                axis=data.get("axis", Axis.AGE.value),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidConfig):
                raise
            raise InvalidConfig(f"malformed model record {data!r}: {exc}") from None


def _scaled_excess(model: WeibullModel, x: np.ndarray) -> np.ndarray:
    """((x - gamma) / alpha) ** beta, zero at and below gamma."""
    excess = np.maximum(x - model.gamma, 0.0) / model.alpha
    return excess ** model.beta


def raw_cdf(model: WeibullModel, x):
    """Unclamped curve value; equals ``delta`` for ``x <= gamma``."""
    x = np.asarray(x, dtype=float)
    # 1 - exp(-z) via expm1 so small z keeps full precision
    out = model.delta - np.expm1(-_scaled_excess(model, x))
    return out if out.ndim else float(out)


def cdf(model: WeibullModel, x):
    """Clamped cumulative failure probability at index value(s) ``x >= 0``."""
    out = np.clip(raw_cdf(model, x), 0.0, 1.0)
    return out if np.ndim(out) else float(out)


def pdf(model: WeibullModel, x):
    """Density of the unclamped shifted curve; zero below ``gamma``."""
    x = np.asarray(x, dtype=float)
    above = x >= model.gamma
    t = np.where(above, x - model.gamma, 0.0) / model.alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = (model.beta / model.alpha) * t ** (model.beta - 1.0) * np.exp(-(t ** model.beta))
    out = np.where(above, dens, 0.0)
    return out if out.ndim else float(out)


def inverse_cdf(model: WeibullModel, u):
    """Quantile of a proper (``delta == 0``) model for uniforms ``u`` in [0, 1)."""
    if model.delta != 0:
        raise ImproperDistribution(
            f"quantiles are defined for delta = 0 only (got delta={model.delta})")
    u = np.asarray(u, dtype=float)
    out = model.gamma + model.alpha * (-np.log1p(-u)) ** (1.0 / model.beta)
    return out if out.ndim else float(out)


def sample(model: WeibullModel, n: int, seed: int | Sequence[int]) -> np.ndarray:
    """Draw ``n`` lifetimes by inversion with a seeded generator.

    ``seed`` may be an int or a sequence of ints (e.g. ``(seed, asset_index)``)
    so callers can derive independent streams deterministically.
    """
    if model.delta != 0:
        raise ImproperDistribution(
            f"sampling is defined for delta = 0 only (got delta={model.delta})")
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return inverse_cdf(model, rng.random(n))
