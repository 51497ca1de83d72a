from typing import Optional
import logging

import typer

from app.cli.common import handle_errors, outcome_exit_code, print_outcome, write_document
from app.schemas.run import Command, RunConfig
from app.schemas.series import MultiSeries, TimeSeries
from app.services.multivariate_service import MultivariateService
from app.services.testing_service import RelevantTestService
from app.utils.validators import ingest_csv

logger = logging.getLogger(__name__)


@handle_errors
def test(
        input_path: Optional[str] = typer.Option(None, "--input", help="CSV file with an optional t column and value columns"),
        level_c: Optional[float] = typer.Option(None, "--c", help="Level c of a relevant deviation"),
        delta: Optional[float] = typer.Option(None, "--delta", help="Relevant time fraction threshold in (0, 1)"),
        alpha: float = typer.Option(0.05, "--alpha", help="Nominal level"),
        side: str = typer.Option("plus", "--side", help="plus, minus or two_sided"),
        bandwidth: Optional[float] = typer.Option(None, "--bandwidth", help="Fixed mean bandwidth b_n, GCV when unset"),
        h_d: Optional[float] = typer.Option(None, "--h-d", help="Indicator bandwidth, N^{-1/2}/2 when unset"),
        grid_size: Optional[int] = typer.Option(None, "--grid-size", help="Riemann knots N, n when unset"),
        lrv_m: Optional[int] = typer.Option(None, "--lrv-m", help="Fixed LRV block length"),
        lrv_tau: Optional[float] = typer.Option(None, "--lrv-tau", help="Fixed LRV smoothing bandwidth"),
        lrv_auto: bool = typer.Option(False, "--lrv-auto", help="Minimal-volatility LRV tuning"),
        multivariate: bool = typer.Option(False, "--multivariate", help="Test the norm of the vector mean"),
        mc_draws: Optional[int] = typer.Option(None, "--mc-draws", help="Monte Carlo draws of the multivariate quantile"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Seed of the multivariate Monte Carlo quantile"),
        output_path: Optional[str] = typer.Option(None, "--output", help="Write the JSON document here instead of stdout"),
):
    """Test H0: T_c <= Delta and write the decision as JSON"""
    cfg = RunConfig(
        command=Command.TEST,
        input_path=input_path,
        level_c=level_c,
        delta=delta,
        alpha=alpha,
        side=side,
        bandwidth=bandwidth,
        h_d=h_d,
        grid_size=grid_size,
        lrv_m=lrv_m,
        lrv_tau=lrv_tau,
        lrv_auto=lrv_auto,
        multivariate=multivariate,
        mc_draws=mc_draws,
        seed=seed,
        output_path=output_path,
    )
    series = ingest_csv(cfg.input_path)
    test_cfg = cfg.test_config()

    if cfg.multivariate:
        if isinstance(series, TimeSeries):
            series = MultiSeries(values=series.values, names=[series.name])
        outcome = MultivariateService().multivariate_test(series, test_cfg, cfg.mc_draws, seed=cfg.seed or 0)
    elif isinstance(series, MultiSeries):
        raise ValueError(f"Input has {series.m} value columns, pass --multivariate to test the vector mean")
    else:
        outcome = RelevantTestService().run_test(series, test_cfg)

    write_document(outcome.to_document(), cfg.output_path)
    print_outcome(outcome)
    raise typer.Exit(code=outcome_exit_code(outcome))
