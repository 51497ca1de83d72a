from typing import Optional
import logging

import pandas as pd
import typer

from app.cli.common import console, handle_errors, write_document, write_frame
from app.schemas.run import Command, OutputFormat, RunConfig
from app.schemas.series import MultiSeries
from app.services.lrv_service import LrvService
from app.utils.validators import ingest_csv

logger = logging.getLogger(__name__)


@handle_errors
def lrv(
        input_path: Optional[str] = typer.Option(None, "--input", help="CSV file with one value column"),
        lrv_m: Optional[int] = typer.Option(None, "--lrv-m", help="Fixed block length"),
        lrv_tau: Optional[float] = typer.Option(None, "--lrv-tau", help="Fixed smoothing bandwidth"),
        lrv_auto: bool = typer.Option(False, "--lrv-auto", help="Minimal-volatility tuning"),
        output_path: Optional[str] = typer.Option(None, "--output", help="Output file, stdout when unset"),
        output_format: str = typer.Option("csv", "--format", help="csv (curve) or json"),
):
    """Estimate the long-run variance curve on the design points i/n"""
    cfg = RunConfig(
        command=Command.LRV,
        input_path=input_path,
        lrv_m=lrv_m,
        lrv_tau=lrv_tau,
        lrv_auto=lrv_auto,
        output_path=output_path,
        output_format=output_format,
    )
    series = ingest_csv(cfg.input_path)
    if isinstance(series, MultiSeries):
        raise ValueError("'lrv' works on a single value column")

    curve = LrvService().estimate(series, cfg.lrv_tuning())
    if cfg.output_format == OutputFormat.CSV:
        write_frame(pd.DataFrame({"t": curve.grid, "sigma2": curve.sigma2}), cfg.output_path)
    else:
        write_document(
            {"m": curve.m, "tau": curve.tau, "t": curve.grid.tolist(), "sigma2": curve.sigma2.tolist()},
            cfg.output_path,
        )
    console.print(f"Long-run variance with m = {curve.m}, tau = {curve.tau:.4f}")
