from typing import Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from app.core.config import settings
from app.core.errors import GridTooSmall, InvalidTuning
from app.schemas.fit import LrvCurve, LrvMatrixCurve
from app.schemas.series import MultiSeries, TimeSeries
from app.schemas.testing import LrvMode, LrvTuning
from app.utils.concurrency import ordered_map
from app.utils.kernels import KernelSpec, get_kernel

logger = logging.getLogger(__name__)

CHUNK_CELLS = 2_000_000
MIN_GRID_ENTRIES = 5
NEIGHBOURHOOD = 2
TAU_CEILING = 0.49
ISE_BOUNDARY_CAP = 0.25


def default_tuning(n: int) -> Tuple[int, float]:
    """m = floor(n^{2/7}) (at least 2), tau = n^{-1/7} (below 0.5)"""
    if n < 10:
        raise ValueError(f"Need at least 10 observations, got {n}")
    m = max(2, int(math.floor(n ** (2.0 / 7.0))))
    tau = min(n ** (-1.0 / 7.0), TAU_CEILING)
    return m, tau


class LrvService:
    """Difference-based estimator of the time-varying long-run variance"""

    def __init__(self, kernel: Optional[KernelSpec] = None, max_workers: Optional[int] = None):
        self.kernel = kernel or get_kernel(settings.default_kernel)
        self.max_workers = max_workers or settings.max_workers

    def lrv_estimate(
            self,
            series: TimeSeries,
            m: int,
            tau: float,
            grid: Optional[Sequence[float]] = None,
    ) -> LrvCurve:
        """sigma^2(t) = sum_j (m Delta_j^2 / 2) omega(t, j)"""
        n = series.n
        self._check_tuning(n, m, tau)
        points = series.design_points if grid is None else np.asarray(grid, dtype=float)

        j, deltas = self._block_differences(series.values, m)
        terms = m * deltas ** 2 / 2.0
        sigma2 = self._smooth(terms, j / n, points, n, m, tau)
        return LrvCurve(grid=points, sigma2=np.maximum(sigma2, 0.0), m=m, tau=tau)

    def estimate(self, series: TimeSeries, tuning: LrvTuning, grid: Optional[Sequence[float]] = None) -> LrvCurve:
        """Resolve the tuning mode and estimate"""
        if tuning.mode == LrvMode.FIXED:
            m, tau = tuning.m, tuning.tau
        elif tuning.mode == LrvMode.AUTO:
            m, tau = self.minimal_volatility_tuning(series)
        else:
            m, tau = default_tuning(series.n)
        logger.info(f"Long-run variance tuning ({tuning.mode.value}): m = {m}, tau = {tau:.4f}")
        return self.lrv_estimate(series, m, tau, grid)

    def default_grids(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        m_max = min(int(math.ceil(3.0 * n ** (2.0 / 7.0))), n // 4)
        m_grid = np.arange(2, m_max + 1)
        tau_grid = np.geomspace(1.5 * m_max / n, TAU_CEILING, settings.lrv_tau_candidates)
        return m_grid, tau_grid

    def minimal_volatility_tuning(
            self,
            series: TimeSeries,
            m_grid: Optional[Sequence[int]] = None,
            tau_grid: Optional[Sequence[float]] = None,
    ) -> Tuple[int, float]:
        """(m, tau) where the estimate is least volatile across neighbouring tunings, penalised"""
        default_m, default_tau = self.default_grids(series.n)
        ms = np.sort(np.asarray(default_m if m_grid is None else m_grid, dtype=int))
        taus = np.sort(np.asarray(default_tau if tau_grid is None else tau_grid, dtype=float))
        if ms.size < MIN_GRID_ENTRIES or taus.size < MIN_GRID_ENTRIES:
            raise GridTooSmall(
                f"Minimal volatility needs at least {MIN_GRID_ENTRIES} values per grid, "
                f"got {ms.size} block lengths and {taus.size} bandwidths",
                details={"m_grid": ms.tolist(), "tau_grid": taus.tolist()},
            )

        n = series.n
        for m in ms:
            for tau in taus:
                self._check_tuning(n, int(m), float(tau))

        differences: Dict[int, Tuple[np.ndarray, np.ndarray]] = {
            int(m): self._block_differences(series.values, int(m)) for m in ms
        }

        def curve(h: int, j: int, points: np.ndarray) -> np.ndarray:
            m = int(ms[h])
            idx, deltas = differences[m]
            return self._smooth(m * deltas ** 2 / 2.0, idx / n, points, n, m, float(taus[j]))

        def ise(cell: Tuple[int, int]) -> float:
            h, j = cell
            gamma = min(float(taus[j]) + ms[h] / n, ISE_BOUNDARY_CAP)
            points = np.linspace(gamma, 1.0 - gamma, settings.lrv_ise_points)
            neighbours = {(h, j)}
            for r in range(-NEIGHBOURHOOD, NEIGHBOURHOOD + 1):
                if 0 <= j + r < taus.size:
                    neighbours.add((h, j + r))
                if 0 <= h + r < ms.size:
                    neighbours.add((h + r, j))
            curves = np.vstack([curve(a, b, points) for a, b in sorted(neighbours)])
            return float(np.mean(np.var(curves, axis=0)))

        cells = [(h, j) for h in range(ms.size) for j in range(taus.size)]
        ises = ordered_map(ise, cells, self.max_workers)
        integrated = float(np.mean(ises))

        best, best_value = cells[0], math.inf
        for (h, j), value in zip(cells, ises):
            criterion = value + 2.0 * (taus[j] + ms[h] / n) * integrated
            logger.debug(f"Minimal volatility m = {ms[h]}, tau = {taus[j]:.4f}: {criterion:.6g}")
            if criterion < best_value:
                best, best_value = (h, j), criterion

        m, tau = int(ms[best[0]]), float(taus[best[1]])
        logger.info(f"Minimal volatility selected m = {m}, tau = {tau:.4f}")
        return m, tau

    def lrv_matrix_estimate(
            self,
            series: MultiSeries,
            m: int,
            tau: float,
            grid: Optional[Sequence[float]] = None,
    ) -> LrvMatrixCurve:
        """Entrywise analogue with vector block differences, projected onto PSD matrices"""
        n, dim = series.n, series.m
        self._check_tuning(n, m, tau)
        points = np.arange(1, n + 1) / n if grid is None else np.asarray(grid, dtype=float)

        j, deltas = self._block_differences(series.values, m)
        outer = m * np.einsum("ja,jb->jab", deltas, deltas) / 2.0
        flat = outer.reshape(j.size, dim * dim)
        smoothed = np.column_stack([
            self._smooth(flat[:, k], j / n, points, n, m, tau) for k in range(dim * dim)
        ]).reshape(points.size, dim, dim)
        smoothed = (smoothed + np.swapaxes(smoothed, 1, 2)) / 2.0

        eigvals, eigvecs = np.linalg.eigh(smoothed)
        clipped = np.einsum("kij,kj,klj->kil", eigvecs, np.clip(eigvals, 0.0, None), eigvecs)
        clipped = (clipped + np.swapaxes(clipped, 1, 2)) / 2.0
        return LrvMatrixCurve(grid=points, matrices=clipped, m_block=m, tau=tau)

    def estimate_matrix(self, series: MultiSeries, tuning: LrvTuning, grid: Optional[Sequence[float]] = None) -> LrvMatrixCurve:
        if tuning.mode == LrvMode.FIXED:
            m, tau = tuning.m, tuning.tau
        else:
            m, tau = default_tuning(series.n)
        logger.info(f"Long-run covariance tuning: m = {m}, tau = {tau:.4f}")
        return self.lrv_matrix_estimate(series, m, tau, grid)

    @staticmethod
    def _check_tuning(n: int, m: int, tau: float) -> None:
        if not 2 <= m <= n / 4:
            raise InvalidTuning(f"Block length m = {m} must satisfy 2 <= m <= n/4 = {n / 4:g}",
                                details={"m": m, "n": n})
        if not m / n < tau < 0.5:
            raise InvalidTuning(f"tau = {tau:g} must lie in (m/n, 0.5) = ({m / n:g}, 0.5)",
                                details={"tau": tau, "m": m, "n": n})

    @staticmethod
    def _block_differences(values: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
        """Indices j = m..n-m and Delta_j = (S_{j-m+1,j} - S_{j+1,j+m}) / m"""
        n = values.shape[0]
        prefix = np.concatenate([np.zeros((1,) + values.shape[1:]), np.cumsum(values, axis=0)])
        j = np.arange(m, n - m + 1)
        deltas = (2.0 * prefix[j] - prefix[j - m] - prefix[j + m]) / m
        return j, deltas

    def _smooth(
            self,
            terms: np.ndarray,
            locations: np.ndarray,
            points: np.ndarray,
            n: int,
            m: int,
            tau: float,
    ) -> np.ndarray:
        """Kernel-weighted average of terms, constant outside [m/n, 1 - m/n]"""
        t = np.clip(points, m / n, 1.0 - m / n)
        out = np.empty(t.size)
        chunk = max(1, CHUNK_CELLS // max(locations.size, 1))
        for start in range(0, t.size, chunk):
            block = t[start:start + chunk]
            weights = self.kernel.evaluate((locations[None, :] - block[:, None]) / tau)
            total = weights.sum(axis=1)
            total = np.where(total > 0.0, total, 1.0)
            out[start:start + chunk] = (weights @ terms) / total
        return out
