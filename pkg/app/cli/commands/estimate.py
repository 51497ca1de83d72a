from typing import Optional
import logging

import pandas as pd
import typer

from app.cli.common import console, handle_errors, write_document, write_frame
from app.schemas.excess import ExcessConfig
from app.schemas.run import Command, OutputFormat, RunConfig
from app.schemas.series import MultiSeries
from app.services.excess_service import ExcessService
from app.services.regression_service import RegressionService
from app.utils.validators import ingest_csv

logger = logging.getLogger(__name__)


@handle_errors
def estimate(
        input_path: Optional[str] = typer.Option(None, "--input", help="CSV file with one value column"),
        level_c: Optional[float] = typer.Option(None, "--c", help="Level c of a relevant deviation"),
        bandwidth: Optional[float] = typer.Option(None, "--bandwidth", help="Fixed mean bandwidth b_n, GCV when unset"),
        h_d: Optional[float] = typer.Option(None, "--h-d", help="Indicator bandwidth"),
        grid_size: Optional[int] = typer.Option(None, "--grid-size", help="Riemann knots N"),
        output_path: Optional[str] = typer.Option(None, "--output", help="Output file, stdout when unset"),
        output_format: str = typer.Option("json", "--format", help="json (excess measures) or csv (fitted curves)"),
):
    """Estimate T_c^+ and T_c^- or emit the fitted mean curves"""
    cfg = RunConfig(
        command=Command.ESTIMATE,
        input_path=input_path,
        level_c=level_c,
        bandwidth=bandwidth,
        h_d=h_d,
        grid_size=grid_size,
        output_path=output_path,
        output_format=output_format,
    )
    series = ingest_csv(cfg.input_path)
    if isinstance(series, MultiSeries):
        raise ValueError("'estimate' works on a single value column")

    regression = RegressionService()
    b = cfg.bandwidth if cfg.bandwidth is not None else regression.gcv_bandwidth(series)
    excess_cfg = ExcessConfig(level_c=cfg.level_c, grid_size=cfg.grid_size, h_d=cfg.h_d).resolve(series.n, b)
    fit = regression.fit_excess_grid(series, b, excess_cfg.grid_size)

    if cfg.output_format == OutputFormat.CSV:
        frame = pd.DataFrame({"t": fit.query_grid, "mu_tilde": fit.mu_tilde, "mu_hat": fit.mu_hat})
        write_frame(frame, cfg.output_path)
        return

    excess = ExcessService()
    corrected = excess.estimate_excess(fit, excess_cfg)
    plain = excess.estimate_excess(fit, excess_cfg, corrected=False)
    document = {
        "t_plus": corrected.t_plus,
        "t_minus": corrected.t_minus,
        "t_total": corrected.t_total,
        "t_plus_uncorrected": plain.t_plus,
        "t_minus_uncorrected": plain.t_minus,
        "tuning": {"b_n": b, "h_d": excess_cfg.h_d, "grid_size": excess_cfg.grid_size},
        "config": excess_cfg.model_dump(mode="json"),
    }
    write_document(document, cfg.output_path)
    console.print(f"T+ = {corrected.t_plus:.4f}, T- = {corrected.t_minus:.4f} (b_n = {b:.4f}, h_d = {excess_cfg.h_d:.4g})")
