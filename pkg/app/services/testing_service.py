from typing import Optional, Tuple
import logging

import numpy as np
from scipy import stats

from app.schemas.excess import ExcessConfig, Side
from app.schemas.fit import LrvCurve, MeanFit
from app.schemas.series import TimeSeries
from app.schemas.testing import TestConfig, TestOutcome
from app.services.excess_service import ExcessService
from app.services.lrv_service import LrvService
from app.services.regression_service import RegressionService
from app.utils.kernels import derive_jackknife

logger = logging.getLogger(__name__)

CHUNK_CELLS = 2_000_000


def indicator_weights(deviations: np.ndarray, cfg: ExcessConfig, side: Side) -> np.ndarray:
    """K_d terms of the linearised statistic for the tested side"""
    k_d = cfg.kernel_spec
    upper = k_d.evaluate((deviations - cfg.level_c) / cfg.h_d)
    lower = k_d.evaluate((deviations + cfg.level_c) / cfg.h_d)
    if side == Side.PLUS:
        return upper
    if side == Side.MINUS:
        return lower
    return upper - lower


class RelevantTestService:
    """Gaussian-multiplier test of H0: T_c <= Delta"""

    def __init__(
            self,
            regression: Optional[RegressionService] = None,
            excess: Optional[ExcessService] = None,
            lrv: Optional[LrvService] = None,
    ):
        self.regression = regression or RegressionService()
        self.excess = excess or ExcessService()
        self.lrv = lrv or LrvService(kernel=self.regression.kernel)

    def v_bar(self, fit: MeanFit, lrv: LrvCurve, cfg: ExcessConfig, side: Side = Side.PLUS) -> float:
        """Variance of the Gaussian approximation, summed over the kernel supports only"""
        cfg = cfg.resolve(fit.grid_size, fit.bandwidth or None)
        n, grid_size, b = fit.n_obs, fit.grid_size, fit.bandwidth
        if b <= 0:
            raise ValueError("V_bar needs a fit with positive bandwidth")

        weights = indicator_weights(fit.deviations(), cfg, side)
        active = np.nonzero(weights)[0]
        if active.size == 0:
            return 0.0
        a = weights[active]
        u = (active + 1) / grid_size
        total = float(a.sum())

        j = np.arange(1, n + 1)
        t_j = j / n
        nearest = np.searchsorted(u, t_j)
        left = np.abs(t_j - u[np.clip(nearest - 1, 0, u.size - 1)])
        right = np.abs(t_j - u[np.clip(nearest, 0, u.size - 1)])
        relevant = (np.minimum(left, right) <= b) | (t_j <= b)
        j, t_j = j[relevant], t_j[relevant]

        jackknife = derive_jackknife(fit.kernel)
        sigma2 = lrv.at(t_j)
        inner = np.empty(j.size)
        chunk = max(1, CHUNK_CELLS // a.size)
        for start in range(0, j.size, chunk):
            block = t_j[start:start + chunk]
            interior = jackknife.k_star((u[None, :] - block[:, None]) / b) @ a
            inner[start:start + chunk] = interior - jackknife.k_bar_star(block / b) * total
        return float(np.sum(sigma2 * inner ** 2))

    def run_test(self, series: TimeSeries, cfg: TestConfig) -> TestOutcome:
        """Fit, estimate, calibrate and decide"""
        outcome, _ = self.run_test_with_fit(series, cfg)
        return outcome

    def run_test_with_fit(self, series: TimeSeries, cfg: TestConfig) -> Tuple[TestOutcome, MeanFit]:
        """run_test that also hands back the Jackknife fit for diagnostics"""
        try:
            b = cfg.b_n if cfg.b_n is not None else self.regression.gcv_bandwidth(series)
            excess_cfg = cfg.excess_config().resolve(series.n, b)
            fit = self.regression.fit_excess_grid(series, b, excess_cfg.grid_size)
            estimate = self.excess.estimate_excess(fit, excess_cfg)
            lrv = self.lrv.estimate(series, cfg.lrv, grid=series.design_points)
            v_bar = self.v_bar(fit, lrv, excess_cfg, cfg.side)
            logger.info(
                f"Test tuning: b_n = {b:.4f}, h_d = {excess_cfg.h_d:.4f}, N = {excess_cfg.grid_size}, "
                f"m = {lrv.m}, tau = {lrv.tau:.4f}"
            )
        except Exception as e:
            logger.error(f"Relevant change test failed: {e}")
            raise

        excess = estimate.for_side(cfg.side)
        statistic = series.n * excess_cfg.grid_size * b * excess_cfg.h_d * (excess - cfg.delta)
        degenerate = v_bar <= 0.0
        if degenerate:
            logger.warning("Degenerate variance: V_bar = 0, deciding by the sign of the statistic")
            quantile = 0.0
            reject = statistic > 0.0
            p_value = 0.0 if reject else 1.0
        else:
            scale = float(np.sqrt(v_bar))
            quantile = float(stats.norm.ppf(1.0 - cfg.alpha)) * scale
            reject = statistic > quantile
            p_value = float(stats.norm.sf(statistic / scale))

        outcome = TestOutcome(
            statistic=float(statistic),
            v_bar=v_bar,
            quantile=quantile,
            p_value=p_value,
            reject=bool(reject),
            t_plus=estimate.t_plus,
            t_minus=estimate.t_minus,
            degenerate_variance=degenerate,
            bandwidth=b,
            h_d=excess_cfg.h_d,
            grid_size=excess_cfg.grid_size,
            lrv_m=lrv.m,
            lrv_tau=lrv.tau,
            config=cfg,
        )
        logger.info(
            f"Statistic {outcome.statistic:.6g} vs quantile {outcome.quantile:.6g}: "
            f"{'reject' if outcome.reject else 'accept'} (p = {outcome.p_value:.4g})"
        )
        return outcome, fit
