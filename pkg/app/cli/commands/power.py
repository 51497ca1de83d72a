from typing import Optional
import logging

import pandas as pd
import typer

from app.cli.common import handle_errors, print_frame, write_document, write_frame
from app.core.errors import ConfigurationError
from app.core.presets import get_preset, load_experiment_file
from app.schemas.run import Command, OutputFormat, RunConfig
from app.schemas.simulation import PowerSpec
from app.services.simulation_service import SimulationService

logger = logging.getLogger(__name__)


@handle_errors
def power(
        preset: Optional[str] = typer.Option(None, "--preset", help="fig3-left, fig3-right, fig4, fig5-III or fig5-IV"),
        config_path: Optional[str] = typer.Option(None, "--config", help="YAML file with base, parameter and values"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Master seed"),
        reps: Optional[int] = typer.Option(None, "--reps", help="Replications per point"),
        output_path: Optional[str] = typer.Option(None, "--output", help="Output file, stdout when unset"),
        output_format: str = typer.Option("csv", "--format", help="csv or json"),
):
    """Rejection rates along a swept parameter"""
    cfg = RunConfig(
        command=Command.POWER,
        preset=preset,
        config_path=config_path,
        seed=seed,
        reps=reps,
        output_path=output_path,
        output_format=output_format,
    )
    spec = get_preset(cfg.preset) if cfg.preset else load_experiment_file(cfg.config_path)
    if not isinstance(spec, PowerSpec):
        raise ConfigurationError(f"'{spec.name}' is a table of cells, run it with 'simulate'")
    spec = spec.with_reps(cfg.reps)

    points = SimulationService().run_power_curve(spec, cfg.seed)
    frame = pd.DataFrame([point.to_row() for point in points])
    if cfg.output_format == OutputFormat.CSV:
        write_frame(frame, cfg.output_path)
    else:
        write_document({"name": spec.name, "rows": frame.to_dict(orient="records")}, cfg.output_path)
    print_frame(frame, spec.name, ["parameter", "value", "reps", "rejection_rate"])
