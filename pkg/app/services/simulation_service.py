from typing import List, Optional, Sequence
import logging

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigurationError
from app.schemas.excess import Side, default_h_d
from app.schemas.series import TimeSeries
from app.schemas.simulation import (
    BandwidthMode,
    ErrorModel,
    ExperimentCell,
    ExperimentSpec,
    McReport,
    MeanModel,
    PowerPoint,
    PowerSpec,
)
from app.services.excess_service import ExcessService
from app.services.lrv_service import LrvService
from app.services.regression_service import RegressionService
from app.services.testing_service import RelevantTestService
from app.utils.concurrency import ordered_map
from app.utils.rng import derive_seeds, get_rng

logger = logging.getLogger(__name__)

MIN_GCV_BANDWIDTH = 0.01


def simulate_series(
        mean: MeanModel,
        err: ErrorModel,
        n: int,
        seed: int,
        truncation: Optional[int] = None,
) -> TimeSeries:
    """X_i = mu(i/n) + scale * sum_{k=0}^{K} a(i/n)^k eta_{i-k}"""
    if n < 10:
        raise ValueError(f"Need at least 10 observations, got {n}")
    depth = err.truncation if truncation is None else truncation
    rng = get_rng(seed)

    # eta_1..eta_n first, then eta_0, eta_-1, ... so deeper truncations extend the same stream
    current = rng.standard_normal(n)
    presample = rng.standard_normal(depth)
    innovations = np.concatenate([presample[::-1], current])

    t = np.arange(1, n + 1) / n
    coefficient = err.coefficient(t)
    errors = np.zeros(n)
    power = np.ones(n)
    positions = np.arange(n) + depth
    for lag in range(depth + 1):
        errors += power * innovations[positions - lag]
        power = power * coefficient

    return TimeSeries(values=mean(t) + err.scale * errors, name=mean.label)


def true_lrv(err: ErrorModel, t) -> np.ndarray:
    """Long-run variance of the filter frozen at t"""
    return err.long_run_variance(t)


class SimulationService:
    """Monte Carlo harness for level, bias and power experiments"""

    def __init__(
            self,
            testing: Optional[RelevantTestService] = None,
            excess: Optional[ExcessService] = None,
            max_workers: Optional[int] = None,
            min_replications: Optional[int] = None,
    ):
        # Replications run in parallel, so the per-replication services stay single threaded
        self.testing = testing or RelevantTestService(
            regression=RegressionService(max_workers=1),
            lrv=LrvService(max_workers=1),
        )
        self.excess = excess or ExcessService()
        self.max_workers = max_workers or settings.max_workers
        self.min_replications = min_replications if min_replications is not None else settings.min_replications

    def run_level_experiment(self, cell: ExperimentCell, seed: int, key: Sequence[int] = ()) -> McReport:
        """Rejection rate and bias/sd of the corrected and uncorrected estimators"""
        if cell.reps < self.min_replications:
            raise ConfigurationError(
                f"Need at least {self.min_replications} replications, got {cell.reps}",
                details={"reps": cell.reps},
            )
        seeds = derive_seeds(seed, cell.reps, *key)
        target = self.excess.oracle_excess(cell.mean, cell.level_c, cell.side)
        logger.info(
            f"Cell {cell.mean.label},{cell.error.label} n={cell.n} c={cell.level_c} delta={cell.delta}: "
            f"{cell.reps} replications, target excess {target:.4f}"
        )

        results = ordered_map(lambda s: self._replicate(cell, s), seeds, self.max_workers)
        rejections = np.array([r[0] for r in results], dtype=float)
        corrected = np.array([r[1] for r in results])
        uncorrected = np.array([r[2] for r in results])
        ddof = 1 if cell.reps > 1 else 0

        return McReport(
            model=f"{cell.mean.label},{cell.error.label}",
            n=cell.n,
            c=cell.level_c,
            delta=cell.delta,
            alpha=cell.alpha,
            b_mode=cell.b_label,
            reps=cell.reps,
            rejection_rate=float(rejections.mean()),
            bias=float(corrected.mean() - target),
            sd=float(corrected.std(ddof=ddof)),
            seed=seed,
            bias_uncorrected=float(uncorrected.mean() - target),
            sd_uncorrected=float(uncorrected.std(ddof=ddof)),
            target=target,
            seeds=list(seeds),
        )

    def run_experiment(self, spec: ExperimentSpec, seed: int) -> List[McReport]:
        """One report per cell, cell k seeded under key (k,)"""
        logger.info(f"Running experiment '{spec.name}' with {len(spec.cells)} cells")
        return [self.run_level_experiment(cell, seed, key=(k,)) for k, cell in enumerate(spec.cells)]

    def run_power_curve(self, spec: PowerSpec, seed: int) -> List[PowerPoint]:
        """Rejection rates along the swept parameter"""
        logger.info(f"Power sweep '{spec.name}' over {spec.parameter}: {len(spec.values)} points")
        points = []
        for k, (value, cell) in enumerate(zip(spec.values, spec.cells())):
            report = self.run_level_experiment(cell, seed, key=(k,))
            points.append(PowerPoint(parameter=spec.parameter, value=value, report=report))
        return points

    def _replicate(self, cell: ExperimentCell, seed: int):
        series = simulate_series(cell.mean, cell.error, cell.n, seed)
        if cell.b_mode == BandwidthMode.FIXED:
            bandwidth = cell.bandwidth
        else:
            selected = self.testing.regression.gcv_bandwidth(series)
            h_d = cell.h_d if cell.h_d is not None else default_h_d(cell.n)
            bandwidth = max(selected + cell.b_offset, MIN_GCV_BANDWIDTH, 4.0 / cell.n, h_d)

        outcome, fit = self.testing.run_test_with_fit(series, cell.test_config(bandwidth))
        excess_cfg = cell.test_config(bandwidth).excess_config()
        plain = self.testing.excess.estimate_excess(fit, excess_cfg, corrected=False)
        corrected = {Side.PLUS: outcome.t_plus, Side.MINUS: outcome.t_minus}.get(
            cell.side, outcome.t_plus + outcome.t_minus
        )
        return outcome.reject, corrected, plain.for_side(cell.side)
