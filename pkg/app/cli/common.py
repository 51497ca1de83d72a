"""Shared plumbing of the CLI commands: error documents, exit codes and writers"""
from typing import Any, Callable, Dict, Optional
from functools import wraps
from pathlib import Path
import json
import logging

import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from app.core.config import settings
from app.core.errors import AnalysisError
from app.schemas.response import ErrorResponse, ValidationErrorDetail, ValidationErrorResponse
from app.schemas.testing import TestOutcome

logger = logging.getLogger(__name__)

# stdout carries the result document, summaries and errors go to stderr
console = Console(stderr=True)

EXIT_ACCEPT = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2
EXIT_REJECT = 3


def error_document(exc: Exception) -> ErrorResponse:
    """Map an exception to the error document printed on stderr"""
    if isinstance(exc, ValidationError):
        return ValidationErrorResponse(
            message="Invalid configuration",
            validation_errors=[
                ValidationErrorDetail(
                    field=".".join(str(part) for part in error["loc"]) or "config",
                    message=error["msg"],
                    code=error["type"],
                )
                for error in exc.errors()
            ],
        )
    if isinstance(exc, AnalysisError):
        return ErrorResponse(error_code=exc.error_code, message=exc.message, details=exc.details or None)
    if isinstance(exc, FileNotFoundError):
        return ErrorResponse(error_code="FILE_NOT_FOUND", message=str(exc))
    if isinstance(exc, ValueError):
        return ErrorResponse(error_code="INVALID_ARGUMENT", message=str(exc))
    return ErrorResponse(error_code="INTERNAL_ERROR", message=str(exc) if settings.debug else "An unexpected error occurred")


def handle_errors(command: Callable) -> Callable:
    """Turn failures into an ErrorResponse on stderr and exit code 1"""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except typer.Exit:
            raise
        except (AnalysisError, ValidationError, FileNotFoundError, ValueError) as e:
            logger.error(f"{command.__name__} failed: {e}")
            _print_error(error_document(e))
            raise typer.Exit(code=EXIT_ERROR)
        except Exception as e:
            logger.error(f"Unexpected error in {command.__name__}: {e}", exc_info=True)
            _print_error(error_document(e))
            raise typer.Exit(code=EXIT_ERROR)
    return wrapper


def _print_error(document: ErrorResponse) -> None:
    typer.echo(document.model_dump_json(exclude_none=True), err=True)


def outcome_exit_code(outcome: TestOutcome) -> int:
    """0 accept, 3 reject, 2 accept with degenerate variance"""
    if outcome.reject:
        return EXIT_REJECT
    if outcome.degenerate_variance:
        return EXIT_DEGENERATE
    return EXIT_ACCEPT


def write_document(document: Dict[str, Any], output_path: Optional[str]) -> None:
    """JSON document to a file or stdout; floats keep their shortest round-trip repr"""
    text = json.dumps(document, indent=2)
    if output_path:
        Path(output_path).write_text(text + "\n", encoding="utf-8")
        logger.info(f"Wrote {output_path}")
    else:
        typer.echo(text)


def write_frame(frame: pd.DataFrame, output_path: Optional[str]) -> None:
    """CSV with 17 significant digits to a file or stdout"""
    if output_path:
        frame.to_csv(output_path, index=False, float_format=settings.float_format, lineterminator="\n")
        logger.info(f"Wrote {len(frame)} rows to {output_path}")
    else:
        typer.echo(frame.to_csv(index=False, float_format=settings.float_format, lineterminator="\n"), nl=False)


def print_outcome(outcome: TestOutcome) -> None:
    """Console summary of a test decision"""
    table = Table(title="Relevant change test", show_header=False)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("T+ / T-", f"{outcome.t_plus:.4f} / {outcome.t_minus:.4f}")
    table.add_row("statistic", f"{outcome.statistic:.6g}")
    table.add_row("quantile", f"{outcome.quantile:.6g}")
    table.add_row("p-value", f"{outcome.p_value:.4f}")
    table.add_row("b_n, h_d", f"{outcome.bandwidth:.4f}, {outcome.h_d:.4g}")
    table.add_row("m, tau", f"{outcome.lrv_m}, {outcome.lrv_tau:.4f}")
    decision = "[red]reject[/red]" if outcome.reject else "[green]accept[/green]"
    if outcome.degenerate_variance:
        decision += " (degenerate variance)"
    table.add_row("decision", decision)
    console.print(table)


def print_frame(frame: pd.DataFrame, title: str, columns: Optional[list] = None) -> None:
    """Console table of report rows"""
    columns = columns or list(frame.columns)
    table = Table(title=title)
    for column in columns:
        table.add_column(str(column), justify="right")
    for _, row in frame[columns].iterrows():
        table.add_row(*[f"{v:.4g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)
