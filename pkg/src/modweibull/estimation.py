"""Parameter estimation for the shifted Weibull family.

The shifts (gamma, delta) are never fitted continuously. They come from a
discrete grid, and for each grid point only scale and shape are estimated:

* least squares on the linearized curve, for ``(x, f_hat)`` table rows;
* maximum likelihood with a safeguarded Newton solve, for raw lifetimes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .dataset import FailureTable
from .errors import (
    AllCandidatesFailed,
    DegenerateSample,
    DegenerateSlope,
    InvalidConfig,
    ModWeibullError,
    NoConvergence,
    SamplesBelowGamma,
    TooFewUsableRows,
)
from .models import Axis, ModelForm, WeibullModel

logger = logging.getLogger(__name__)

BETA0 = 1.2
BETA_BRACKET = (1e-3, 50.0)
BETA_TOL = 1e-10
MAX_ITER = 100
# margin keeping log(-log(.)) away from its singularities
EDGE_EPS = 1e-12


class Method(str, Enum):
    MLE = "MLE"
    LSE = "LSE"


@dataclass(frozen=True)
class ShiftGrid:
    gammas: tuple[float, ...] = ()
    deltas: tuple[float, ...] = ()

    def __post_init__(self):
        gammas = tuple(sorted(float(g) for g in self.gammas))
        deltas = tuple(sorted(float(d) for d in self.deltas))
        if len(set(gammas)) != len(gammas) or len(set(deltas)) != len(deltas):
            raise InvalidConfig("shift grid values must be unique")
        if any(g < 0 for g in gammas):
            raise InvalidConfig("gamma grid values must be >= 0")
        if any(not -1 < d < 1 for d in deltas):
            raise InvalidConfig("delta grid values must lie in (-1, 1)")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "deltas", deltas)

    def to_dict(self) -> dict[str, list[float]]:
        return {"gammas": list(self.gammas), "deltas": list(self.deltas)}


@dataclass(frozen=True)
class Candidate:
    """A model form with its shifts fixed, awaiting alpha and beta."""

    form: ModelForm
    gamma: float
    delta: float
    axis: Axis = Axis.AGE

    def describe(self) -> str:
        return WeibullModel(self.form, 1.0, 1.0, self.gamma, self.delta, self.axis).describe()


@dataclass(frozen=True)
class FitResult:
    model: WeibullModel
    method: Method
    iterations: int
    residual: float
    usable_rows: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "method": self.method.value,
            "iterations": self.iterations,
            "residual": self.residual,
            "usable_rows": self.usable_rows,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FitResult":
        try:
            return cls(
                WeibullModel.from_dict(data["model"]),
                Method(data["method"]),
                int(data.get("iterations", 0)),
                float(data.get("residual", 0.0)),
                int(data.get("usable_rows", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModWeibullError):
                raise
            raise InvalidConfig(f"malformed fit record: {exc}") from None


@dataclass(frozen=True)
class FitFailure:
    candidate: Candidate
    error: str


def expand_candidates(grid: ShiftGrid, axis: Axis | str = Axis.AGE) -> list[Candidate]:
    """Standard, then each X-shift, each Y-shift, then every (gamma, delta) pair."""
    axis = Axis.parse(axis)
    out = [Candidate(ModelForm.STANDARD, 0.0, 0.0, axis)]
    out += [Candidate(ModelForm.XSHIFT, g, 0.0, axis) for g in grid.gammas]
    out += [Candidate(ModelForm.YSHIFT, 0.0, d, axis) for d in grid.deltas]
    out += [Candidate(ModelForm.XYSHIFT, g, d, axis) for g in grid.gammas for d in grid.deltas]
    return out


# ---------------------------------------------------------------------------
# least squares

def usable_lse_rows(table: FailureTable, gamma: float, delta: float) -> np.ndarray:
    """Mask of rows the log-log transform can use.

    A row qualifies when it is unflagged, ``x > gamma`` and ``f_hat`` lies
    strictly between the clamp levels ``max(0, delta)`` and ``min(1, 1 + delta)``.
    Rows sitting on a clamp carry no information about alpha or beta.
    """
    f = table.f_hat
    return (
        ~table.flagged
        & (table.x > gamma)
        & (f > max(0.0, delta) + EDGE_EPS)
        & (f < min(1.0, 1.0 + delta) - EDGE_EPS)
    )


def fit_lse(train: FailureTable, gamma: float = 0.0, delta: float = 0.0,
            form: ModelForm | None = None) -> FitResult:
    """Least-squares fit of alpha and beta with the shifts held fixed.

    Each usable row maps to ``x' = ln(x - gamma)``, ``y = ln(-ln(1 + delta - f_hat))``,
    which is linear: ``y = beta * x' - beta * ln(alpha)``. The slope gives beta
    and the intercept ``c`` gives ``alpha = exp(-c / beta)``.

    Raises:
        TooFewUsableRows: fewer than 3 rows survive filtering.
        DegenerateSlope: slope <= 0 or all x' equal.
    """
    mask = usable_lse_rows(train, gamma, delta)
    n = int(mask.sum())
    if n < 3:
        raise TooFewUsableRows(
            f"gamma={gamma:g}, delta={delta:g}: {n} usable rows, need at least 3")
    xp = np.log(train.x[mask] - gamma)
    y = np.log(-np.log(1.0 + delta - train.f_hat[mask]))

    # centered normal equations; algebraically the textbook n*Sxy - Sx*Sy form
    x_bar, y_bar = xp.mean(), y.mean()
    dx = xp - x_bar
    sxx = float(dx @ dx)
    if sxx <= 0.0:
        raise DegenerateSlope(f"gamma={gamma:g}, delta={delta:g}: all rows share one x")
    slope = float(dx @ (y - y_bar)) / sxx
    if not slope > 0.0:
        raise DegenerateSlope(
            f"gamma={gamma:g}, delta={delta:g}: slope {slope:.4g} <= 0, data not increasing")
    intercept = y_bar - slope * x_bar
    alpha = math.exp(-intercept / slope)
    resid = y - (intercept + slope * xp)
    model = WeibullModel(form or ModelForm.for_shifts(gamma, delta), alpha, slope,
                         gamma, delta, train.axis)
    return FitResult(model, Method.LSE, 1, float(resid @ resid), n)


# ---------------------------------------------------------------------------
# maximum likelihood

def _shape_terms(log_x: np.ndarray, beta: float) -> tuple[float, float]:
    """Score g(beta) and its derivative for the profile likelihood in beta.

    g(beta) = 1/beta + mean(ln x) - sum(x^beta ln x) / sum(x^beta)
    Powers are rescaled by max(x)^beta; the ratios are invariant to it.
    """
    w = np.exp(beta * (log_x - log_x.max()))
    s0 = w.sum()
    s1 = w @ log_x
    s2 = w @ (log_x * log_x)
    m1 = s1 / s0
    g = 1.0 / beta + log_x.mean() - m1
    dg = -1.0 / beta**2 - (s2 / s0 - m1 * m1)
    return float(g), float(dg)


def mle_shape_score(samples: Sequence[float], beta: float) -> float:
    """The profile-likelihood score whose root is the MLE of the shape."""
    return _shape_terms(np.log(np.asarray(samples, dtype=float)), beta)[0]


def _solve_shape(log_x: np.ndarray, beta0: float, tol: float, max_iter: int) -> tuple[float, int]:
    lo, hi = BETA_BRACKET
    g_lo, _ = _shape_terms(log_x, lo)
    g_hi, _ = _shape_terms(log_x, hi)
    # g decreases in beta; widen the top of the bracket for very tight samples
    while g_hi > 0.0:
        lo, g_lo = hi, g_hi
        hi *= 2.0
        if hi > 1e6:
            raise NoConvergence("shape root lies beyond beta = 1e6")
        g_hi, _ = _shape_terms(log_x, hi)
    beta_max = hi

    beta = beta0 if lo < beta0 < hi else 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        g, dg = _shape_terms(log_x, beta)
        if abs(g) < tol:
            return beta, it
        if g > 0.0:
            lo = beta
        else:
            hi = beta
        step = beta - g / dg if dg < 0.0 else math.nan
        # Newton unless it leaves (0, beta_max] or the live bracket
        if math.isfinite(step) and 0.0 < step <= beta_max and lo < step < hi:
            beta = step
        else:
            beta = 0.5 * (lo + hi)
    raise NoConvergence(f"shape solve did not reach |g| < {tol:g} in {max_iter} iterations")


def _check_sample(x: np.ndarray) -> np.ndarray:
    if x.size < 2:
        raise DegenerateSample(f"need at least 2 samples, got {x.size}")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise InvalidConfig("samples must be finite and > 0")
    log_x = np.log(x)
    if np.ptp(log_x) == 0.0:
        raise DegenerateSample("all samples are equal; the shape score has no root")
    return log_x


def solve_mle_beta(samples: Sequence[float], beta0: float = BETA0, tol: float = BETA_TOL,
                   max_iter: int = MAX_ITER) -> float:
    """Maximum-likelihood shape estimate for positive samples.

    Newton-Raphson on the score with an analytic derivative, safeguarded by a
    sign-change bracket: any step that leaves the bracket becomes a bisection.

    Returns:
        beta with ``|g(beta)| < tol``.

    Raises:
        DegenerateSample: fewer than two samples or zero spread.
        NoConvergence: ``max_iter`` exhausted.
    """
    log_x = _check_sample(np.asarray(samples, dtype=float))
    return _solve_shape(log_x, beta0, tol, max_iter)[0]


def fit_mle(samples: Sequence[float], gamma: float = 0.0, *, beta0: float = BETA0,
            tol: float = BETA_TOL, max_iter: int = MAX_ITER,
            axis: Axis | str = Axis.AGE) -> FitResult:
    """Fit alpha and beta to raw lifetimes measured from ``gamma``.

    Samples at or below ``gamma`` carry no information about the shifted curve
    and are dropped; ``usable_rows`` reports how many were kept. The scale
    follows from the shape as ``alpha = (mean(x ** beta)) ** (1 / beta)``.
    """
    x = np.asarray(samples, dtype=float) - gamma
    kept = x[x > 0]
    if kept.size < 2:
        raise SamplesBelowGamma(
            f"only {kept.size} samples exceed gamma={gamma:g}; need at least 2")
    if kept.size < x.size:
        logger.warning("fit_mle: dropped %d samples at or below gamma=%g",
                       x.size - kept.size, gamma)
    log_x = _check_sample(kept)
    beta, iterations = _solve_shape(log_x, beta0, tol, max_iter)
    # mean of x^beta in log space, for large beta
    top = log_x.max()
    log_mean = beta * top + math.log(np.mean(np.exp(beta * (log_x - top))))
    alpha = math.exp(log_mean / beta)
    g, _ = _shape_terms(log_x, beta)
    model = WeibullModel(ModelForm.for_shifts(gamma, 0.0), alpha, beta, gamma, 0.0, axis)
    return FitResult(model, Method.MLE, iterations, abs(g), int(kept.size))


# ---------------------------------------------------------------------------
# candidate sweep

def fit_candidates(train: FailureTable, grid: ShiftGrid) -> tuple[list[FitResult], list[FitFailure]]:
    """LSE-fit every candidate; failures are returned, not raised."""
    results: list[FitResult] = []
    failures: list[FitFailure] = []
    for cand in expand_candidates(grid, train.axis):
        try:
            results.append(fit_lse(train, cand.gamma, cand.delta, cand.form))
        except ModWeibullError as exc:
            logger.info("candidate %s not fitted: %s", cand.describe(), exc)
            failures.append(FitFailure(cand, f"{type(exc).__name__}: {exc}"))
    return results, failures


def fit_all(train: FailureTable, grid: ShiftGrid) -> list[FitResult]:
    """Fit every candidate of ``grid``; keep the ones that fit, in candidate order.

    Raises:
        AllCandidatesFailed: no candidate could be fitted.
    """
    results, failures = fit_candidates(train, grid)
    if not results:
        detail = "; ".join(f"{f.candidate.describe()}: {f.error}" for f in failures)
        raise AllCandidatesFailed(f"no candidate model could be fitted ({detail})")
    return results
