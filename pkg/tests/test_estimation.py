import numpy as np
import pytest
from numpy.testing import assert_allclose

from modweibull.dataset import FailureTable
from modweibull.errors import (
    AllCandidatesFailed,
    DegenerateSample,
    DegenerateSlope,
    InvalidConfig,
    SamplesBelowGamma,
    TooFewUsableRows,
)
from modweibull.estimation import (
    Method,
    ShiftGrid,
    expand_candidates,
    fit_all,
    fit_candidates,
    fit_lse,
    fit_mle,
    mle_shape_score,
    solve_mle_beta,
    usable_lse_rows,
)
from modweibull.models import Axis, ModelForm, WeibullModel, sample
from modweibull.synthgen import generate_exact_table

EVEN_GRID = np.arange(2.0, 61.0, 2.0)  # 2, 4, ..., 60
CASE_GRID = ShiftGrid((2.5, 5.0), (0.05, 0.10))


def test_expand_case_grid_gives_nine():
    cands = expand_candidates(CASE_GRID)
    assert len(cands) == 9
    forms = [c.form for c in cands]
    assert forms == [ModelForm.STANDARD] + [ModelForm.XSHIFT] * 2 + [ModelForm.YSHIFT] * 2 \
        + [ModelForm.XYSHIFT] * 4
    assert [(c.gamma, c.delta) for c in cands[5:]] == [(2.5, 0.05), (2.5, 0.1), (5, 0.05), (5, 0.1)]


def test_expand_degenerate_grids():
    assert len(expand_candidates(ShiftGrid())) == 1
    cands = expand_candidates(ShiftGrid((1.0,), ()))
    assert [(c.form, c.gamma) for c in cands] == [(ModelForm.STANDARD, 0), (ModelForm.XSHIFT, 1.0)]


def test_shift_grid_validation():
    assert ShiftGrid((5, 2.5), (0.1, 0.05)).gammas == (2.5, 5.0)
    with pytest.raises(InvalidConfig):
        ShiftGrid((1, 1), ())
    with pytest.raises(InvalidConfig):
        ShiftGrid((-1,), ())
    with pytest.raises(InvalidConfig):
        ShiftGrid((), (1.0,))


# -- LSE

def test_lse_exact_recovery_standard():
    table = generate_exact_table(WeibullModel.standard(20, 1.5), EVEN_GRID)
    fit = fit_lse(table)
    assert fit.method is Method.LSE
    assert_allclose([fit.model.alpha, fit.model.beta], [20, 1.5], rtol=1e-6)
    assert fit.residual <= 1e-18
    assert fit.model.form is ModelForm.STANDARD


@pytest.mark.parametrize("gamma,delta", [(2.5, 0.0), (5.0, 0.0), (0.0, 0.05), (0.0, 0.10),
                                         (2.5, 0.05), (5.0, 0.10), (0.0, -0.10), (3.0, -0.05)])
def test_lse_exact_recovery_shifted(gamma, delta):
    truth = WeibullModel.shifted(18.0, 2.3, gamma, delta)
    table = generate_exact_table(truth, EVEN_GRID)
    fit = fit_lse(table, gamma, delta)
    assert_allclose([fit.model.alpha, fit.model.beta], [18.0, 2.3], rtol=1e-6)
    assert fit.residual <= 1e-18
    assert fit.model.form is truth.form
    assert fit.usable_rows >= 3


def test_lse_all_zero_rows():
    table = FailureTable(EVEN_GRID, np.zeros_like(EVEN_GRID))
    with pytest.raises(TooFewUsableRows):
        fit_lse(table)


def test_lse_decreasing_data():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    table = FailureTable(x, [0.5, 0.4, 0.3, 0.2])
    with pytest.raises(DegenerateSlope):
        fit_lse(table)


def test_usable_rows_filters_clamps_and_flags():
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    f = np.array([0.0, 0.04, 0.2, 0.5, 1.0, 0.7])
    flagged = [False, False, False, False, False, True]
    table = FailureTable(x, np.maximum.accumulate(f), Axis.AGE, flagged)
    mask = usable_lse_rows(table, gamma=1.5, delta=0.05)
    # x=1 below gamma; f=0.04 under delta; f=1 sits on the upper clamp; x=6 flagged
    assert mask.tolist() == [False, False, True, True, False, False]


def test_lse_ignores_flagged_rows():
    truth = WeibullModel.standard(10, 2)
    clean = generate_exact_table(truth, EVEN_GRID[:10])
    f = clean.f_hat.copy()
    f[4] = 0.9  # garbage value on a flagged row must not reach the fit
    table = FailureTable(clean.x, f, Axis.AGE, np.arange(f.size) == 4)
    fit = fit_lse(table)
    assert_allclose([fit.model.alpha, fit.model.beta], [10, 2], rtol=1e-6)
    assert fit.usable_rows == clean.f_hat[(clean.f_hat > 0) & (clean.f_hat < 1)].size - 1


# -- MLE

def test_shape_solver_residual_and_accuracy():
    x = sample(WeibullModel.standard(20, 1.5), 100_000, seed=11)
    beta = solve_mle_beta(x)
    assert abs(mle_shape_score(x, beta)) < 1e-10
    assert abs(beta - 1.5) / 1.5 < 0.05


def test_shape_solver_degenerate():
    with pytest.raises(DegenerateSample):
        solve_mle_beta([3.0, 3.0, 3.0])
    with pytest.raises(DegenerateSample):
        solve_mle_beta([3.0])


@pytest.mark.parametrize("beta_true", [0.4, 1.0, 3.0, 12.0, 80.0])
def test_shape_solver_wide_range(beta_true):
    # 80 lies outside the initial bracket and exercises its widening
    x = sample(WeibullModel.standard(5, beta_true), 20_000, seed=5)
    beta = solve_mle_beta(x)
    assert abs(mle_shape_score(x, beta)) < 1e-10
    assert abs(beta - beta_true) / beta_true < 0.05


def test_shape_solver_bad_start_falls_back():
    x = sample(WeibullModel.standard(20, 1.5), 5_000, seed=2)
    for beta0 in (1e-6, 0.01, 49.0, 1e5):
        beta = solve_mle_beta(x, beta0=beta0)
        assert abs(mle_shape_score(x, beta)) < 1e-10


def test_fit_mle_recovery():
    x = sample(WeibullModel.standard(20, 1.5), 100_000, seed=21)
    fit = fit_mle(x)
    assert fit.method is Method.MLE
    assert abs(fit.model.alpha - 20) / 20 < 0.02
    assert abs(fit.model.beta - 1.5) / 1.5 < 0.05
    assert fit.residual < 1e-10
    assert fit.iterations <= 100


def test_fit_mle_exponential_scale_is_mean():
    x = sample(WeibullModel.standard(7.0, 1.0), 100_000, seed=4)
    fit = fit_mle(x)
    assert abs(fit.model.beta - 1.0) < 0.02
    assert abs(fit.model.alpha - x.mean()) / x.mean() < 0.02


def test_fit_mle_shifted():
    x = sample(WeibullModel.shifted(12.0, 2.0, 3.0), 50_000, seed=8)
    fit = fit_mle(x, gamma=3.0)
    assert fit.model.form is ModelForm.XSHIFT and fit.model.gamma == 3.0
    assert abs(fit.model.alpha - 12) / 12 < 0.02
    assert abs(fit.model.beta - 2) / 2 < 0.05


def test_fit_mle_gamma_above_all_samples():
    with pytest.raises(SamplesBelowGamma):
        fit_mle([1.0, 2.0, 3.0], gamma=10.0)


def test_mle_error_shrinks_with_n():
    truth = WeibullModel.standard(20, 1.5)
    errors = []
    for n in (1_000, 10_000, 100_000):
        # average over a seed family so the trend is not one lucky draw
        e = []
        for seed in range(5):
            fit = fit_mle(sample(truth, n, seed=(seed, n)))
            e.append(abs(fit.model.alpha - 20) / 20 + abs(fit.model.beta - 1.5) / 1.5)
        errors.append(np.mean(e))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.05


# -- fit_all

def test_fit_all_nine_on_clean_table():
    truth = WeibullModel.shifted(25, 2.0, 0.0, 0.0, Axis.HEALTH_INDEX)
    table = generate_exact_table(truth, np.arange(0, 101, 1.0))
    fits = fit_all(table, CASE_GRID)
    assert len(fits) == 9
    assert [f.model.form for f in fits] == [c.form for c in expand_candidates(CASE_GRID)]
    assert all(f.model.axis is Axis.HEALTH_INDEX for f in fits)


def test_fit_all_empty_grid():
    table = generate_exact_table(WeibullModel.standard(25, 2.0), np.arange(1, 40, 1.0))
    fits = fit_all(table, ShiftGrid())
    assert len(fits) == 1 and fits[0].model.form is ModelForm.STANDARD


def test_fit_all_nothing_usable():
    table = FailureTable(EVEN_GRID, np.zeros_like(EVEN_GRID))
    with pytest.raises(AllCandidatesFailed):
        fit_all(table, CASE_GRID)


def test_fit_candidates_reports_failures():
    # rows reach only up to f=0.08 so delta=0.10 candidates have no usable rows
    x = np.arange(1, 11, 1.0)
    f = np.linspace(0.0, 0.08, 10)
    fits, failures = fit_candidates(FailureTable(x, f), ShiftGrid((), (0.05, 0.10)))
    assert [f.model.form for f in fits] == [ModelForm.STANDARD, ModelForm.YSHIFT]
    assert len(failures) == 1 and failures[0].candidate.delta == 0.10
    assert "TooFewUsableRows" in failures[0].error
