from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from app.core.config import settings
from app.schemas.excess import ExcessConfig, SojournEstimate
from app.schemas.fit import MeanFit
from app.schemas.series import MultiSeries, TimeSeries
from app.schemas.testing import TestConfig, TestOutcome
from app.services.lrv_service import LrvService
from app.services.regression_service import RegressionService
from app.utils.kernels import derive_jackknife
from app.utils.rng import get_rng

logger = logging.getLogger(__name__)

CHUNK_CELLS = 2_000_000


class MultivariateService:
    """Relevant changes of a vector mean and sojourn-time excess estimators"""

    def __init__(
            self,
            regression: Optional[RegressionService] = None,
            lrv: Optional[LrvService] = None,
            mc_draws: Optional[int] = None,
    ):
        self.regression = regression or RegressionService()
        self.lrv = lrv or LrvService(kernel=self.regression.kernel)
        self.mc_draws = mc_draws or settings.mc_draws

    def fit_components(
            self,
            series: MultiSeries,
            bandwidth: Optional[float] = None,
            grid_size: Optional[int] = None,
    ) -> Tuple[List[MeanFit], float]:
        """Jackknife fit per coordinate with a common bandwidth (largest GCV choice)"""
        components = [series.component(k) for k in range(series.m)]
        if bandwidth is None:
            bandwidth = max(self.regression.gcv_bandwidth(c) for c in components)
            logger.info(f"Shared bandwidth over {series.m} coordinates: b_n = {bandwidth:.4f}")
        fits = [self.regression.fit_excess_grid(c, bandwidth, grid_size) for c in components]
        return fits, bandwidth

    def multivariate_excess(self, fits: Sequence[MeanFit], cfg: ExcessConfig) -> float:
        """Time fraction where ||mu(t) - mu(0)||^2 exceeds c^2, smoothed on the squared scale"""
        deviations = self._deviations(fits)
        cfg = cfg.resolve(fits[0].grid_size, fits[0].bandwidth or None)
        squared = np.sum(deviations ** 2, axis=1)
        return float(np.mean(cfg.kernel_spec.cdf((squared - cfg.level_c ** 2) / cfg.h_d)))

    def multivariate_test(
            self,
            series: MultiSeries,
            cfg: TestConfig,
            mc_draws: Optional[int] = None,
            seed: int = 0,
    ) -> TestOutcome:
        """Gaussian-multiplier test of H0: T_c <= Delta for the vector mean"""
        draws = mc_draws or self.mc_draws
        if draws < 1000:
            raise ValueError(f"Need at least 1000 Monte Carlo draws, got {draws}")

        try:
            fits, b = self.fit_components(series, cfg.b_n, cfg.grid_size)
            excess_cfg = cfg.excess_config().resolve(series.n, b)
            estimate = self.multivariate_excess(fits, excess_cfg)
            lrv = self.lrv.estimate_matrix(series, cfg.lrv, grid=np.arange(1, series.n + 1) / series.n)
            loadings = self._loadings(fits, excess_cfg, lrv.square_roots(lrv.grid))
        except Exception as e:
            logger.error(f"Multivariate test failed: {e}")
            raise

        n, grid_size = series.n, excess_cfg.grid_size
        statistic = n * grid_size * b * excess_cfg.h_d * (estimate - cfg.delta)
        v_bar = float(np.sum(loadings ** 2))

        if v_bar <= 0.0:
            logger.warning("Degenerate variance: all multiplier loadings vanish")
            quantile, reject = 0.0, statistic > 0.0
            p_value = 0.0 if reject else 1.0
        else:
            samples = self._multiplier_samples(loadings, draws, seed)
            quantile = float(np.quantile(samples, 1.0 - cfg.alpha))
            reject = statistic > quantile
            p_value = float(np.mean(samples >= statistic))
        logger.info(f"Multivariate statistic {statistic:.6g} vs quantile {quantile:.6g} from {draws} draws")

        return TestOutcome(
            statistic=float(statistic),
            v_bar=v_bar,
            quantile=quantile,
            p_value=p_value,
            reject=bool(reject),
            t_plus=estimate,
            t_minus=0.0,
            degenerate_variance=v_bar <= 0.0,
            bandwidth=b,
            h_d=excess_cfg.h_d,
            grid_size=grid_size,
            lrv_m=lrv.m_block,
            lrv_tau=lrv.tau,
            config=cfg,
        )

    def residual_differences(self, series: TimeSeries, fit: MeanFit) -> np.ndarray:
        """Residuals X_i - mu(i/n) relative to the first residual"""
        if fit.query_grid.size != series.n or not np.allclose(fit.query_grid, series.design_points):
            raise ValueError("Residual differences need a fit on the design points i/n")
        residuals = series.values - fit.mu_tilde
        return residuals - residuals[0]

    def sojourn_estimators(
            self,
            fit: MeanFit,
            residual_diffs: Sequence[float],
            cfg: ExcessConfig,
            delta: float,
    ) -> SojournEstimate:
        """Expected sojourn time e_c and P(S_c > Delta) with the mean fit plus residual noise"""
        cfg = cfg.resolve(fit.grid_size, fit.bandwidth or None)
        k_d = cfg.kernel_spec
        v = fit.deviations()
        z = np.asarray(residual_diffs, dtype=float)

        inner = np.empty(z.size)
        chunk = max(1, CHUNK_CELLS // v.size)
        for start in range(0, z.size, chunk):
            paths = v[None, :] + z[start:start + chunk, None]
            above = k_d.cdf((paths - cfg.level_c) / cfg.h_d)
            below = 1.0 - k_d.cdf((paths + cfg.level_c) / cfg.h_d)
            inner[start:start + chunk] = np.mean(above + below, axis=1)

        return SojournEstimate(
            e_hat=float(np.clip(inner.mean(), 0.0, 1.0)),
            p_hat=float(np.mean(inner > delta)),
            delta=delta,
            config=cfg,
        )

    @staticmethod
    def _deviations(fits: Sequence[MeanFit]) -> np.ndarray:
        if not fits:
            raise ValueError("Need at least one coordinate fit")
        grid = fits[0].query_grid
        for fit in fits[1:]:
            if fit.query_grid.shape != grid.shape or not np.array_equal(fit.query_grid, grid):
                raise ValueError("All coordinate fits must share the same grid")
        return np.column_stack([fit.deviations() for fit in fits])

    def _loadings(self, fits: Sequence[MeanFit], cfg: ExcessConfig, roots: np.ndarray) -> np.ndarray:
        """Sigma^{1/2}(j/n) w_j with w_j = sum_i K_d(.) (K* - K_bar*) grad g(i/N)"""
        deviations = self._deviations(fits)
        n, b, grid_size = fits[0].n_obs, fits[0].bandwidth, fits[0].grid_size
        squared = np.sum(deviations ** 2, axis=1)
        weights = cfg.kernel_spec.evaluate((squared - cfg.level_c ** 2) / cfg.h_d)
        gradients = 2.0 * deviations * weights[:, None]
        u = np.arange(1, grid_size + 1) / grid_size
        total = gradients.sum(axis=0)

        jackknife = derive_jackknife(fits[0].kernel)
        t_j = np.arange(1, n + 1) / n
        w = np.empty((n, deviations.shape[1]))
        chunk = max(1, CHUNK_CELLS // grid_size)
        for start in range(0, n, chunk):
            block = t_j[start:start + chunk]
            interior = jackknife.k_star((u[None, :] - block[:, None]) / b) @ gradients
            w[start:start + chunk] = interior - jackknife.k_bar_star(block / b)[:, None] * total[None, :]
        return np.einsum("jab,jb->ja", roots, w)

    @staticmethod
    def _multiplier_samples(loadings: np.ndarray, draws: int, seed: int) -> np.ndarray:
        """Draws of sum_j u_j' V_j with V_j iid standard normal vectors"""
        rng = get_rng(seed)
        flat = loadings.ravel()
        samples = np.empty(draws)
        chunk = max(1, CHUNK_CELLS // flat.size)
        for start in range(0, draws, chunk):
            size = min(chunk, draws - start)
            samples[start:start + size] = rng.standard_normal((size, flat.size)) @ flat
        return samples
