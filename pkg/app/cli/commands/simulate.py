from typing import Optional
import logging

import pandas as pd
import typer

from app.cli.common import handle_errors, print_frame, write_document, write_frame
from app.core.errors import ConfigurationError
from app.core.presets import get_preset, load_experiment_file
from app.schemas.run import Command, OutputFormat, RunConfig
from app.schemas.simulation import ExperimentSpec
from app.services.simulation_service import SimulationService

logger = logging.getLogger(__name__)


@handle_errors
def simulate(
        preset: Optional[str] = typer.Option(None, "--preset", help="table1, table2, table2-full or table3"),
        config_path: Optional[str] = typer.Option(None, "--config", help="YAML file with a list of cells"),
        seed: Optional[int] = typer.Option(None, "--seed", help="Master seed"),
        reps: Optional[int] = typer.Option(None, "--reps", help="Replications per cell"),
        output_path: Optional[str] = typer.Option(None, "--output", help="Output file, stdout when unset"),
        output_format: str = typer.Option("csv", "--format", help="csv or json"),
):
    """Level, bias and sd of the test over Monte Carlo cells"""
    cfg = RunConfig(
        command=Command.SIMULATE,
        preset=preset,
        config_path=config_path,
        seed=seed,
        reps=reps,
        output_path=output_path,
        output_format=output_format,
    )
    spec = get_preset(cfg.preset) if cfg.preset else load_experiment_file(cfg.config_path)
    if not isinstance(spec, ExperimentSpec):
        raise ConfigurationError(f"'{spec.name}' is a parameter sweep, run it with 'power'")
    spec = spec.with_reps(cfg.reps)

    reports = SimulationService().run_experiment(spec, cfg.seed)
    frame = pd.DataFrame([report.to_row() for report in reports])
    if cfg.output_format == OutputFormat.CSV:
        write_frame(frame, cfg.output_path)
    else:
        write_document({"name": spec.name, "rows": frame.to_dict(orient="records")}, cfg.output_path)
    print_frame(frame, spec.name, ["model", "n", "c", "delta", "b_mode", "reps", "rejection_rate", "bias", "sd"])
