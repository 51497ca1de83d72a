import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.errors import AllCandidatesDegenerate, DegenerateWindow
from app.schemas.series import TimeSeries
from app.services.regression_service import RegressionService


def weighted_least_squares(values, t, b, kernel):
    """Direct solve of the local linear normal equations at one point"""
    n = values.size
    x = np.arange(1, n + 1) / n
    w = kernel.evaluate((x - t) / b)
    design = np.column_stack([np.ones(n), x - t])
    lhs = design.T @ (w[:, None] * design)
    rhs = design.T @ (w * values)
    return np.linalg.solve(lhs, rhs)


def test_local_linear_constant(regression):
    series = TimeSeries(values=np.full(100, 5.0))
    for t in (0.0, 0.37, 1.0):
        mu, slope = regression.local_linear(series, t, 0.2)
        assert mu == pytest.approx(5.0, abs=1e-10)
        assert slope == pytest.approx(0.0, abs=1e-8)


def test_local_linear_reproduces_lines(regression, linear_series):
    for t in (0.0, 0.25, 0.5, 0.9, 1.0):
        mu, slope = regression.local_linear(linear_series, t, 0.2)
        assert mu == pytest.approx(2.0 * t, abs=1e-10)
        assert slope == pytest.approx(2.0, abs=1e-8)


def test_local_linear_matches_normal_equations(regression, kernel):
    n = 500
    values = np.sin(2.0 * math.pi * np.arange(1, n + 1) / n)
    series = TimeSeries(values=values)
    for t in (0.03, 0.5, 0.77):
        mu, slope = regression.local_linear(series, t, 0.1)
        expected = weighted_least_squares(values, t, 0.1, kernel)
        assert mu == pytest.approx(expected[0], abs=1e-10)
        assert slope == pytest.approx(expected[1], rel=1e-8)
    mu, _ = regression.local_linear(series, 0.5, 0.1)
    assert abs(mu) <= 4.0 * math.pi ** 2 * 0.1 * 0.1 ** 2


def test_bandwidth_floor(regression):
    series = TimeSeries(values=np.arange(100, dtype=float))
    with pytest.raises(DegenerateWindow):
        regression.local_linear(series, 0.5, 0.001)
    with pytest.raises(ValueError):
        regression.local_linear(series, 1.5, 0.2)


def test_jackknife_fit_constant(regression):
    series = TimeSeries(values=np.full(120, -3.0))
    fit = regression.jackknife_fit(series, np.linspace(0, 1, 11), 0.25)
    assert_allclose(fit.mu_tilde, -3.0, atol=1e-10)
    assert_allclose(fit.mu_hat, -3.0, atol=1e-10)
    assert fit.bandwidth == 0.25
    assert fit.n_obs == 120


def test_jackknife_reduces_bias_order(regression):
    n = 2000
    t = np.arange(1, n + 1) / n
    series = TimeSeries(values=np.sin(2.0 * math.pi * t))
    grid = np.linspace(0.25, 0.75, 101)
    truth = np.sin(2.0 * math.pi * grid)

    wide = regression.jackknife_fit(series, grid, 0.2)
    narrow = regression.jackknife_fit(series, grid, 0.1)
    corrected_ratio = np.max(np.abs(wide.mu_tilde - truth)) / np.max(np.abs(narrow.mu_tilde - truth))
    plain_ratio = np.max(np.abs(wide.mu_hat - truth)) / np.max(np.abs(narrow.mu_hat - truth))

    assert corrected_ratio >= 6.0
    assert 3.0 <= plain_ratio <= 5.0


def test_jackknife_cancels_quadratic_bias(regression):
    n = 2000
    t = np.arange(1, n + 1) / n
    series = TimeSeries(values=t ** 2)
    grid = np.linspace(0.3, 0.7, 41)
    fit = regression.jackknife_fit(series, grid, 0.2)

    corrected = np.max(np.abs(fit.mu_tilde - grid ** 2))
    plain = np.max(np.abs(fit.mu_hat - grid ** 2))
    assert corrected <= 1e-3 * plain

    boundary = regression.jackknife_fit(series, [0.0], 0.2)
    assert abs(boundary.mu_tilde[0]) <= 0.1 * abs(boundary.mu_hat[0])


def test_fit_excess_grid_layout(regression, model_a_series):
    fit = regression.fit_excess_grid(model_a_series, 0.2)
    assert fit.grid_size == model_a_series.n
    assert fit.query_grid[0] == 0.0
    assert fit.query_grid[-1] == 1.0
    assert fit.deviations().shape == (model_a_series.n,)


def test_banded_covariance_diagonal(regression, rng):
    e = rng.standard_normal(300)
    covariance = regression.banded_covariance(e, 0)
    centered = e - e.mean()
    assert_allclose(covariance.entries, np.eye(300) * (centered @ centered / 300))
    assert covariance.ridge == 0.0


def test_banded_covariance_white_noise(regression, rng):
    n = 1000
    covariance = regression.banded_covariance(rng.standard_normal(n), 5)
    dense = covariance.entries
    assert_allclose(dense, dense.T)
    assert np.all(np.abs(covariance.autocovariances[1:]) <= 4.0 / math.sqrt(n))
    assert dense[0, 6] == 0.0
    assert np.linalg.eigvalsh(dense).min() > 0.0


def test_banded_covariance_ar_lag_one(regression, rng):
    n = 5000
    eta = rng.standard_normal(n)
    e = np.empty(n)
    e[0] = eta[0]
    for i in range(1, n):
        e[i] = 0.5 * e[i - 1] + eta[i]
    covariance = regression.banded_covariance(e, 3)
    gamma = covariance.autocovariances
    assert gamma[1] / gamma[0] == pytest.approx(0.5, abs=0.05)


def test_banded_covariance_ridge_escalation(regression):
    # negative lag-1 and lag-2 autocovariances make the unridged band indefinite
    e = np.tile([1.0, -1.0, 1.0, 1.0, -1.0, -1.0], 10)
    covariance = regression.banded_covariance(e, 2)
    assert covariance.ridge > 0.0
    assert np.linalg.eigvalsh(covariance.entries).min() > 0.0
    solved = covariance.solve(np.ones(e.size))
    assert_allclose(covariance.entries @ solved, np.ones(e.size), atol=1e-6)


def test_banded_covariance_band_too_wide(regression):
    with pytest.raises(ValueError):
        regression.banded_covariance(np.ones(10), 10)


def test_default_band(regression):
    assert regression.default_band(500) == 7
    assert RegressionService(band_width=3, max_workers=1).default_band(500) == 3


def test_gcv_single_candidate(regression, model_a_series):
    assert regression.gcv_bandwidth(model_a_series, [0.15]) == 0.15


def test_gcv_shift_invariant(regression, model_a_series):
    candidates = [0.1, 0.2, 0.3]
    assert regression.gcv_bandwidth(model_a_series, candidates) == \
        regression.gcv_bandwidth(model_a_series.shifted(10.0), candidates)


def test_gcv_all_candidates_degenerate(regression):
    series = TimeSeries(values=np.linspace(0.0, 1.0, 100))
    with pytest.raises(AllCandidatesDegenerate):
        regression.gcv_bandwidth(series, [0.001, 0.005])


def test_gcv_skips_degenerate_candidates(regression, model_a_series):
    assert regression.gcv_bandwidth(model_a_series, [0.001, 0.2]) == 0.2


def test_gcv_parallel_matches_sequential(model_a_series):
    candidates = [0.08, 0.12, 0.2, 0.3]
    sequential = RegressionService(max_workers=1).gcv_bandwidth(model_a_series, candidates)
    parallel = RegressionService(max_workers=4).gcv_bandwidth(model_a_series, candidates)
    assert sequential == parallel


@pytest.mark.slow
def test_gcv_selects_moderate_bandwidth_for_model_a(parabola):
    from app.schemas.simulation import ErrorModel
    from app.services.simulation_service import simulate_series

    regression = RegressionService(max_workers=1)
    selected = [
        regression.gcv_bandwidth(simulate_series(parabola, ErrorModel(name="I"), 500, seed))
        for seed in range(20)
    ]
    assert 0.1 <= float(np.median(selected)) <= 0.3


@pytest.mark.slow
def test_gcv_oversmooths_flat_truth():
    from app.schemas.simulation import ErrorModel, MeanModel
    from app.services.simulation_service import simulate_series

    regression = RegressionService(max_workers=1)
    candidates = regression.default_candidates(300)
    selected = [
        regression.gcv_bandwidth(simulate_series(MeanModel(name="flat"), ErrorModel(name="iid", scale=1.0), 300, seed))
        for seed in range(100)
    ]
    assert np.median(selected) >= np.median(candidates)
