from typing import Callable, Optional
import logging
import math

import numpy as np
from scipy import integrate

from app.core.config import settings
from app.core.errors import InvalidWindow, ZeroBaseline
from app.schemas.excess import ExcessConfig, ExcessEstimate, Side
from app.schemas.fit import MeanFit, excess_grid
from app.utils.kernels import KernelSpec

logger = logging.getLogger(__name__)


def smooth_indicator_plus(v, c: float, h_d: float, k_d: KernelSpec):
    """int_c^inf K_d((v - u)/h_d) du / h_d = cdf((v - c)/h_d)"""
    if h_d <= 0:
        raise ValueError("h_d must be positive")
    return k_d.cdf((np.asarray(v, dtype=float) - c) / h_d)


def smooth_indicator_minus(v, c: float, h_d: float, k_d: KernelSpec):
    """Smoothed 1{v < -c}"""
    if h_d <= 0:
        raise ValueError("h_d must be positive")
    return 1.0 - k_d.cdf((np.asarray(v, dtype=float) + c) / h_d)


class ExcessService:
    """Smoothed excess measures T^+, T^- and their variants"""

    def __init__(self, relative_floor: Optional[float] = None):
        self.relative_floor = relative_floor if relative_floor is not None else settings.relative_floor

    def estimate_excess(self, fit: MeanFit, cfg: ExcessConfig, corrected: bool = True) -> ExcessEstimate:
        """Riemann sums of the smoothed indicators over the knots i/N"""
        cfg = self._resolve(fit, cfg)
        source = fit if corrected else fit.uncorrected()
        v = source.deviations()
        k_d = cfg.kernel_spec

        t_plus = float(np.mean(smooth_indicator_plus(v, cfg.level_c, cfg.h_d, k_d)))
        t_minus = float(np.mean(smooth_indicator_minus(v, cfg.level_c, cfg.h_d, k_d)))
        logger.debug(f"Excess at c = {cfg.level_c}: T+ = {t_plus:.6f}, T- = {t_minus:.6f}")
        return ExcessEstimate(
            t_plus=t_plus,
            t_minus=t_minus,
            corrected=corrected,
            config=cfg,
        )

    def deterministic_excess(
            self,
            mu: Callable[[np.ndarray], np.ndarray],
            cfg: ExcessConfig,
            side: Side = Side.PLUS,
    ) -> float:
        """Same Riemann sum with the true mean plugged in"""
        grid_size = cfg.grid_size or settings.oracle_grid_size
        cfg = cfg.resolve(grid_size)
        fit = MeanFit.from_function(mu, excess_grid(grid_size), n_obs=grid_size)
        return self.estimate_excess(fit, cfg).for_side(side)

    def oracle_excess(self, mu: Callable[[np.ndarray], np.ndarray], level_c: float, side: Side = Side.PLUS) -> float:
        """High-resolution deterministic excess used as Monte Carlo target"""
        cfg = ExcessConfig(level_c=level_c, grid_size=settings.oracle_grid_size, h_d=settings.oracle_h_d)
        return self.deterministic_excess(mu, cfg, side)

    def excess_vs_average_trend(self, fit: MeanFit, t0: float, cfg: ExcessConfig) -> float:
        """Time fraction after t0 where mu exceeds its average over [0, t0] by c"""
        if not 0.0 < t0 < 1.0:
            raise InvalidWindow(f"t0 must lie in (0, 1), got {t0}", details={"t0": t0})
        cfg = self._resolve(fit, cfg)
        grid, values = fit.query_grid, fit.mu_tilde

        inside = grid < t0
        xs = np.append(grid[inside], t0)
        ys = np.append(values[inside], np.interp(t0, grid, values))
        average = float(integrate.trapezoid(ys, xs)) / t0

        start = int(math.floor(cfg.grid_size * t0))
        knots = np.arange(start, cfg.grid_size + 1)
        weights = smooth_indicator_plus(values[knots] - average, cfg.level_c, cfg.h_d, cfg.kernel_spec)
        return float(np.sum(weights) / cfg.grid_size)

    def relative_excess(self, fit: MeanFit, cfg: ExcessConfig) -> float:
        """Two-sided excess of the relative deviation (mu(t) - mu(0)) / mu(0)"""
        cfg = self._resolve(fit, cfg)
        baseline = fit.origin_value
        if abs(baseline) <= self.relative_floor:
            raise ZeroBaseline(
                f"|mu(0)| = {abs(baseline):g} is below the floor {self.relative_floor:g}",
                details={"baseline": baseline},
            )
        ratio = fit.deviations() / baseline
        k_d = cfg.kernel_spec
        plus = smooth_indicator_plus(ratio, cfg.level_c, cfg.h_d, k_d)
        minus = smooth_indicator_minus(ratio, cfg.level_c, cfg.h_d, k_d)
        return float(np.mean(plus + minus))

    def level_set_measure(
            self,
            mu: Callable[[np.ndarray], np.ndarray],
            gamma: float,
            delta: float,
            resolution: int = 1_000_000,
    ) -> float:
        """Lebesgue measure of {t : |mu(t) - gamma| <= delta} on a fine grid"""
        t = (np.arange(resolution) + 0.5) / resolution
        return float(np.mean(np.abs(np.asarray(mu(t), dtype=float) - gamma) <= delta))

    @staticmethod
    def _resolve(fit: MeanFit, cfg: ExcessConfig) -> ExcessConfig:
        if cfg.grid_size is not None and cfg.grid_size != fit.grid_size:
            raise ValueError(f"Fit has {fit.grid_size} knots, configuration asks for {cfg.grid_size}")
        return cfg.resolve(fit.grid_size, fit.bandwidth or None)
