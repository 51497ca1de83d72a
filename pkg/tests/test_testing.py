import numpy as np
import pytest
from scipy import stats

from app.schemas.excess import ExcessConfig, Side
from app.schemas.fit import LrvCurve
from app.schemas.series import TimeSeries
from app.schemas.simulation import BandwidthMode, ErrorModel, ErrorModelName, ExperimentCell, MeanModel
from app.schemas.testing import LrvMode, LrvTuning, TestConfig
from app.services.simulation_service import SimulationService, simulate_series
from app.services.testing_service import indicator_weights
from app.utils.kernels import derive_jackknife
from app.utils.models import parabola as parabola_mean

from tests.conftest import plug_in_fit


@pytest.fixture
def small_fit(regression):
    series = simulate_series(MeanModel(name="a"), ErrorModel(name=ErrorModelName.MODEL_I), n=120, seed=3)
    return series, regression.fit_excess_grid(series, 0.2)


def naive_v_bar(fit, lrv, cfg, side):
    """Double sum over all observations and knots"""
    n, grid_size, b = fit.n_obs, fit.grid_size, fit.bandwidth
    weights = indicator_weights(fit.deviations(), cfg, side)
    u = np.arange(1, grid_size + 1) / grid_size
    jackknife = derive_jackknife(fit.kernel)
    total = 0.0
    for j in range(1, n + 1):
        t = j / n
        inner = np.sum(weights * jackknife.k_star((u - t) / b)) - jackknife.k_bar_star(t / b) * weights.sum()
        total += float(lrv.at(t)) * inner ** 2
    return total


@pytest.mark.parametrize("side", [Side.PLUS, Side.TWO_SIDED])
def test_v_bar_matches_double_sum(testing_service, lrv_service, small_fit, side):
    series, fit = small_fit
    cfg = ExcessConfig(level_c=1.5, h_d=0.05).resolve(series.n, 0.2)
    lrv = lrv_service.lrv_estimate(series, 3, 0.3)
    expected = naive_v_bar(fit, lrv, cfg, side)
    assert expected > 0.0
    assert testing_service.v_bar(fit, lrv, cfg, side) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_v_bar_matches_double_sum_on_random_fixtures(testing_service, lrv_service, regression, seed):
    rng = np.random.default_rng([2024, seed])
    n = int(rng.integers(60, 201))
    b = float(rng.uniform(0.1, 0.3))
    side = (Side.PLUS, Side.TWO_SIDED)[seed % 2]
    series = simulate_series(MeanModel(name="a"), ErrorModel(name=ErrorModelName.MODEL_I), n=n, seed=seed)
    fit = regression.fit_excess_grid(series, b)
    cfg = ExcessConfig(level_c=float(rng.uniform(1.0, 1.7)), h_d=0.1).resolve(n, b)
    lrv = lrv_service.lrv_estimate(series, 2, 0.4)
    expected = naive_v_bar(fit, lrv, cfg, side)
    assert expected > 0.0
    assert testing_service.v_bar(fit, lrv, cfg, side) == pytest.approx(expected, rel=1e-9)


def test_v_bar_of_plug_in_fit_with_unit_variance(testing_service):
    n = 200
    fit = plug_in_fit(parabola_mean(8.0), n, bandwidth=0.2, n_obs=n)
    grid = np.arange(1, n + 1) / n
    lrv = LrvCurve(grid=grid, sigma2=np.ones(n), m=1, tau=0.5)
    cfg = ExcessConfig(level_c=1.8).resolve(n, 0.2)
    expected = naive_v_bar(fit, lrv, cfg, Side.PLUS)
    assert expected > 0.0
    assert testing_service.v_bar(fit, lrv, cfg) == pytest.approx(expected, rel=1e-9)


def test_v_bar_scales_with_lrv(testing_service, lrv_service, small_fit):
    series, fit = small_fit
    cfg = ExcessConfig(level_c=1.5, h_d=0.05)
    lrv = lrv_service.lrv_estimate(series, 3, 0.3)
    base = testing_service.v_bar(fit, lrv, cfg)
    assert testing_service.v_bar(fit, lrv.scaled(4.0), cfg) == pytest.approx(4.0 * base, rel=1e-12)


def test_v_bar_vanishes_without_level_crossings(testing_service, lrv_service, small_fit):
    series, fit = small_fit
    lrv = lrv_service.lrv_estimate(series, 3, 0.3)
    assert testing_service.v_bar(fit, lrv, ExcessConfig(level_c=5.0, h_d=0.05)) == 0.0


def test_run_test_document(testing_service, model_a_series):
    cfg = TestConfig(level_c=1.8, delta=0.15, alpha=0.05, b_n=0.2)
    outcome = testing_service.run_test(model_a_series, cfg)
    document = outcome.to_document()
    assert set(document) == {
        "statistic", "v_bar", "quantile", "p_value", "reject", "t_plus", "t_minus",
        "degenerate_variance", "tuning", "config",
    }
    assert document["tuning"]["b_n"] == 0.2
    assert document["tuning"]["grid_size"] == 500
    assert document["tuning"]["h_d"] == pytest.approx(0.5 / np.sqrt(500))
    assert (document["tuning"]["lrv_m"], document["tuning"]["lrv_tau"]) == (5, pytest.approx(500 ** (-1 / 7)))
    assert document["config"]["side"] == "plus"
    assert outcome.statistic == pytest.approx(
        500 * 500 * 0.2 * outcome.h_d * (outcome.t_plus - 0.15)
    )


def test_reject_iff_small_p_value(testing_service, model_a_series):
    for delta in (0.05, 0.2, 0.3, 0.45, 0.8):
        outcome = testing_service.run_test(model_a_series, TestConfig(level_c=1.8, delta=delta, b_n=0.2))
        assert not outcome.degenerate_variance
        assert outcome.reject == (outcome.p_value < 0.05)
        assert outcome.quantile == pytest.approx(stats.norm.ppf(0.95) * np.sqrt(outcome.v_bar))


def test_statistic_decreases_in_delta(testing_service, model_a_series):
    outcomes = [
        testing_service.run_test(model_a_series, TestConfig(level_c=1.8, delta=delta, b_n=0.2))
        for delta in np.linspace(0.05, 0.6, 6)
    ]
    statistics = [o.statistic for o in outcomes]
    p_values = [o.p_value for o in outcomes]
    assert np.all(np.diff(statistics) < 0.0)
    assert np.all(np.diff(p_values) >= 0.0)
    # same fit and variance throughout
    assert len({o.v_bar for o in outcomes}) == 1


def test_degenerate_variance_accepts(testing_service):
    series = TimeSeries(values=np.ones(200))
    outcome = testing_service.run_test(series, TestConfig(level_c=1.0, delta=0.2, b_n=0.2))
    assert outcome.degenerate_variance
    assert outcome.v_bar == 0.0
    assert outcome.quantile == 0.0
    assert not outcome.reject
    assert outcome.p_value == 1.0


def test_two_sided_test_uses_total_excess(testing_service):
    n = 400
    t = np.arange(1, n + 1) / n
    rng = np.random.default_rng(11)
    series = TimeSeries(values=np.sin(2 * np.pi * t) + 0.1 * rng.standard_normal(n))
    cfg = TestConfig(level_c=0.5, delta=0.2, side=Side.TWO_SIDED, b_n=0.15)
    outcome = testing_service.run_test(series, cfg)
    assert outcome.t_plus == pytest.approx(1 / 3, abs=0.05)
    assert outcome.t_minus == pytest.approx(1 / 3, abs=0.05)
    assert outcome.statistic == pytest.approx(
        n * n * 0.15 * outcome.h_d * (outcome.t_plus + outcome.t_minus - 0.2)
    )
    assert outcome.reject


def test_gcv_bandwidth_when_unset(testing_service, model_a_series):
    outcome = testing_service.run_test(model_a_series, TestConfig(level_c=1.8, delta=0.3))
    assert outcome.bandwidth == testing_service.regression.gcv_bandwidth(model_a_series)


def test_fixed_lrv_tuning_is_used(testing_service, model_a_series):
    tuning = LrvTuning(mode=LrvMode.FIXED, m=4, tau=0.25)
    outcome = testing_service.run_test(model_a_series, TestConfig(level_c=1.8, delta=0.3, b_n=0.2, lrv=tuning))
    assert (outcome.lrv_m, outcome.lrv_tau) == (4, 0.25)


@pytest.mark.slow
@pytest.mark.parametrize("mean, error, level_c, b_mode, bandwidth", [
    ("a", ErrorModelName.MODEL_I, 1.82, BandwidthMode.FIXED, 0.2),
    ("b", ErrorModelName.MODEL_II, 1.672, BandwidthMode.GCV, None),
])
def test_level_at_boundary(mean, error, level_c, b_mode, bandwidth):
    # T_c^+ = 0.3 exactly at these levels
    cell = ExperimentCell(
        mean=MeanModel(name=mean), error=ErrorModel(name=error), n=500, level_c=level_c,
        delta=0.3, alpha=0.05, b_mode=b_mode, bandwidth=bandwidth, reps=500,
    )
    report = SimulationService(min_replications=1).run_level_experiment(cell, seed=4600)
    assert 0.02 <= report.rejection_rate <= 0.08


@pytest.mark.slow
def test_power_under_alternative(testing_service):
    rejections = []
    for seed in range(100):
        series = simulate_series(MeanModel(name="a"), ErrorModel(name=ErrorModelName.MODEL_I), 500, seed)
        cfg = TestConfig(level_c=1.82, delta=0.1, alpha=0.05, b_n=0.2)
        rejections.append(testing_service.run_test(series, cfg).reject)
    assert np.mean(rejections) >= 0.8
