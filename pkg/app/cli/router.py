import typer

from app.cli.commands import estimate, lrv, power, simulate, test

# Main CLI application
cli = typer.Typer(
    name="relevant-excess",
    help="Detect relevant changes in the mean of a locally stationary time series",
    no_args_is_help=True,
    add_completion=False,
)

cli.command("test")(test.test)
cli.command("estimate")(estimate.estimate)
cli.command("lrv")(lrv.lrv)
cli.command("simulate")(simulate.simulate)
cli.command("power")(power.power)
