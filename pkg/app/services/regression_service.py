from typing import Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import linalg

from app.core.config import settings
from app.core.errors import AllCandidatesDegenerate, DegenerateWindow
from app.schemas.fit import BandedCovariance, MeanFit, excess_grid
from app.schemas.series import TimeSeries
from app.utils.concurrency import ordered_map
from app.utils.kernels import KernelSpec, SQRT2, derive_jackknife, get_kernel

logger = logging.getLogger(__name__)

# Relative tolerance on det(X'WX) / (S0 S2) below which a window is singular
DEGENERACY_TOLERANCE = 1e-10
# Upper bound on query points times window width held in memory at once
CHUNK_CELLS = 2_000_000
RIDGE_START = 1e-8
RIDGE_FACTOR = 100.0


class RegressionService:
    """Local linear mean estimation with Jackknife bias correction and GCV"""

    def __init__(
            self,
            kernel: Optional[KernelSpec] = None,
            band_width: Optional[int] = None,
            max_workers: Optional[int] = None,
    ):
        self.kernel = kernel or get_kernel(settings.default_kernel)
        self.band_width = band_width if band_width is not None else settings.band_width
        self.max_workers = max_workers or settings.max_workers

    def local_linear(self, series: TimeSeries, t: float, b: float) -> Tuple[float, float]:
        """Intercept and slope of the kernel-weighted least squares line at t"""
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"Query point must lie in [0, 1], got {t}")
        mu, mu_dot = self._local_linear_many(series.values, np.array([t]), b)
        return float(mu[0]), float(mu_dot[0])

    def jackknife_fit(self, series: TimeSeries, query_grid: Sequence[float], b: float) -> MeanFit:
        """2 mu_{b/sqrt2} - mu_b on every grid point"""
        grid = np.asarray(query_grid, dtype=float)
        if grid.size and (grid.min() < 0.0 or grid.max() > 1.0):
            raise ValueError("Query points must lie in [0, 1]")
        self._check_bandwidth(series.n, b / SQRT2)

        mu_hat, _ = self._local_linear_many(series.values, grid, b)
        mu_half, _ = self._local_linear_many(series.values, grid, b / SQRT2)
        return MeanFit(
            query_grid=grid,
            mu_tilde=2.0 * mu_half - mu_hat,
            mu_hat=mu_hat,
            bandwidth=b,
            n_obs=series.n,
            kernel=self.kernel,
        )

    def fit_excess_grid(self, series: TimeSeries, b: float, grid_size: Optional[int] = None) -> MeanFit:
        """Jackknife fit on the anchor 0 and the knots i/N"""
        return self.jackknife_fit(series, excess_grid(grid_size or series.n), b)

    def residuals(self, series: TimeSeries, b: float) -> np.ndarray:
        """X_i - mu_tilde_b(i/n)"""
        fit = self.jackknife_fit(series, series.design_points, b)
        return series.values - fit.mu_tilde

    def banded_covariance(self, residuals: np.ndarray, band: int) -> BandedCovariance:
        """Banded Toeplitz autocovariance matrix, ridged until positive definite"""
        e = np.asarray(residuals, dtype=float)
        n = e.size
        if band >= n:
            raise ValueError(f"Band width {band} must be smaller than n = {n}")

        centered = e - e.mean()
        autocovariances = np.array([centered[: n - lag] @ centered[lag:] / n for lag in range(band + 1)])

        ridge = 0.0
        while True:
            covariance = BandedCovariance(
                band_width=band, autocovariances=autocovariances, ridge=ridge, size=n
            )
            try:
                linalg.cholesky_banded(covariance.upper_bands())
                break
            except linalg.LinAlgError:
                ridge = RIDGE_START if ridge == 0.0 else ridge * RIDGE_FACTOR
                logger.warning(f"Banded covariance not positive definite, retrying with ridge {ridge:g}")

        return covariance

    def default_band(self, n: int) -> int:
        """floor(n^{1/3}) unless configured"""
        band = self.band_width if self.band_width is not None else int(math.floor(n ** (1.0 / 3.0)))
        return min(band, n - 1)

    def default_candidates(self, n: int) -> np.ndarray:
        lower = max(settings.gcv_min_bandwidth, 4.0 / n)
        upper = max(settings.gcv_max_bandwidth, lower)
        return np.geomspace(lower, upper, settings.gcv_candidates)

    def gcv_score(self, series: TimeSeries, b: float, band: Optional[int] = None) -> float:
        """n^{-1} e' Gamma^{-1} e / (1 - K*(0)/(nb))^2 with Jackknife residuals"""
        n = series.n
        e = self.residuals(series, b)
        covariance = self.banded_covariance(e, self.default_band(n) if band is None else band)
        quadratic = float(e @ covariance.solve(e)) / n

        jackknife = derive_jackknife(self.kernel)
        denominator = 1.0 - jackknife.k_star_at_zero / (n * b)
        if denominator <= 0.0:
            raise DegenerateWindow(f"GCV denominator vanishes at b = {b}", details={"bandwidth": b})
        return quadratic / denominator ** 2

    def gcv_bandwidth(self, series: TimeSeries, candidates: Optional[Sequence[float]] = None) -> float:
        """Candidate bandwidth minimising the GCV criterion, ties to the smaller one"""
        grid = np.sort(np.asarray(
            candidates if candidates is not None else self.default_candidates(series.n), dtype=float
        ))
        if grid.size == 0:
            raise ValueError("GCV needs at least one candidate bandwidth")

        def score(b: float) -> Optional[float]:
            try:
                return self.gcv_score(series, b)
            except DegenerateWindow as e:
                logger.debug(f"GCV candidate {b:.4f} skipped: {e.message}")
                return None

        scores = ordered_map(score, list(grid), self.max_workers)

        best_b, best_score = None, math.inf
        for b, value in zip(grid, scores):
            logger.debug(f"GCV({b:.4f}) = {value}")
            if value is not None and value < best_score:
                best_b, best_score = float(b), value

        if best_b is None:
            raise AllCandidatesDegenerate(
                "Every candidate bandwidth produced a degenerate window",
                details={"candidates": grid.tolist()},
            )
        logger.info(f"GCV selected bandwidth b_n = {best_b:.4f}")
        return best_b

    def _check_bandwidth(self, n: int, b: float) -> None:
        if b < 2.0 / n:
            raise DegenerateWindow(
                f"Bandwidth {b:.5f} is below the floor 2/n = {2.0 / n:.5f}",
                details={"bandwidth": b, "n": n},
            )

    def _local_linear_many(self, values: np.ndarray, grid: np.ndarray, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorised local linear fit; each query touches only its kernel window"""
        n = values.size
        self._check_bandwidth(n, b)

        half_width = int(math.floor(b * n)) + 2
        offsets = np.arange(-half_width, half_width + 1)
        chunk = max(1, CHUNK_CELLS // offsets.size)

        mu = np.empty(grid.size)
        slope = np.empty(grid.size)
        for start in range(0, grid.size, chunk):
            t = grid[start:start + chunk]
            idx = np.rint(t * n).astype(int)[:, None] + offsets[None, :]
            valid = (idx >= 1) & (idx <= n)
            safe = np.clip(idx, 1, n)
            d = safe / n - t[:, None]
            w = np.where(valid, self.kernel.evaluate(d / b), 0.0)
            x = values[safe - 1]

            s0 = w.sum(axis=1)
            s1 = (w * d).sum(axis=1)
            s2 = (w * d * d).sum(axis=1)
            t0 = (w * x).sum(axis=1)
            t1 = (w * d * x).sum(axis=1)
            det = s0 * s2 - s1 ** 2

            singular = (s0 <= 0.0) | (det <= DEGENERACY_TOLERANCE * s0 * s2)
            if np.any(singular):
                bad = float(t[np.argmax(singular)])
                raise DegenerateWindow(
                    f"Weighted design matrix is singular at t = {bad:.5f} for b = {b:.5f}",
                    details={"t": bad, "bandwidth": b},
                )
            mu[start:start + chunk] = (s2 * t0 - s1 * t1) / det
            slope[start:start + chunk] = (s0 * t1 - s1 * t0) / det

        return mu, slope
