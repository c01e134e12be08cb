import logging
import time
from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from rich.text import Text

from config.runtime_config import setup_logging
from config.scenario_config import config_hash, load_scenario
from models.errors import FkppError, NumericalError
from pipeline import CHECKS, ScenarioPipeline, summarize
from tools.artifacts import ArtifactWriter

app = typer.Typer(add_completion=False, help="Fractional Fisher-KPP invasion lab in periodic media.")
console = Console(stderr=True)
logger = logging.getLogger(__name__)

CONFIG_OPTION = typer.Option(..., "--config", "-c", exists=True, dir_okay=False, help="Scenario JSON")
OUT_OPTION = typer.Option(Path("out"), "--out-dir", "-o", help="Artifact directory")
DT_OPTION = typer.Option(None, "--dt", help="Override run.dt")
T_OPTION = typer.Option(None, "--T", help="Override run.T")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Debug logging")


def run_scenario(config_path: Path, subcommand: str, out_dir: Path, dt: Optional[float] = None,
                 T: Optional[float] = None, checks: Optional[List[str]] = None) -> int:
    """Load, run and persist one subcommand; returns the exit status."""
    started = time.perf_counter()
    writer = ArtifactWriter(out_dir)
    digest = ""
    try:
        config = load_scenario(config_path)
        digest = config_hash(config)
        pipeline = ScenarioPipeline(config, out_dir, dt=dt, T=T, writer=writer)
        result = pipeline.run_pipeline(subcommand, checks or ())
    except (ValidationError, FkppError) as exc:
        return _fail(writer, subcommand, digest, started, exc, getattr(exc, "exit_code", 2))
    except (ValueError, ArithmeticError) as exc:
        # numpy/scipy failures (LinAlgError is a ValueError) count as numerical
        logger.exception("unexpected numerical failure in %s", subcommand)
        return _fail(writer, subcommand, digest, started, exc, NumericalError.exit_code)

    writer.write_manifest(subcommand, digest, time.perf_counter() - started)
    _report(subcommand, result)
    return 0


def _fail(writer: ArtifactWriter, subcommand: str, digest: str, started: float, exc: Exception, code: int) -> int:
    console.print(Text.assemble((f"{type(exc).__name__}: ", "bold red"), str(exc)), soft_wrap=True)
    writer.write_manifest(subcommand, digest, time.perf_counter() - started, status="failed",
                          error=f"{type(exc).__name__}: {exc}")
    return code


def _report(subcommand: str, result: dict) -> None:
    if subcommand == "verify":
        table = Table(title="verification")
        table.add_column("check")
        table.add_column("passed")
        for name, passed in summarize(result):
            table.add_row(name, "[green]yes[/green]" if passed else "[red]no[/red]")
        console.print(table)
        return
    table = Table(title=subcommand)
    table.add_column("quantity")
    table.add_column("value")
    for key in sorted(result):
        value = result[key]
        if isinstance(value, (int, float, str, bool)) or value is None:
            table.add_row(key, str(value))
    console.print(table)


def _exit(code: int) -> None:
    if code:
        raise typer.Exit(code)


@app.command()
def eig(config: Path = CONFIG_OPTION, out_dir: Path = OUT_OPTION, verbose: bool = VERBOSE_OPTION):
    """Principal eigenpair of the cell problem."""
    setup_logging(verbose)
    _exit(run_scenario(config, "eig", out_dir))


@app.command()
def simulate(config: Path = CONFIG_OPTION, out_dir: Path = OUT_OPTION, dt: Optional[float] = DT_OPTION,
             T: Optional[float] = T_OPTION, verbose: bool = VERBOSE_OPTION):
    """Evolve the scenario and write the snapshot stream."""
    setup_logging(verbose)
    _exit(run_scenario(config, "simulate", out_dir, dt, T))


@app.command()
def front(config: Path = CONFIG_OPTION, out_dir: Path = OUT_OPTION, dt: Optional[float] = DT_OPTION,
          T: Optional[float] = T_OPTION, verbose: bool = VERBOSE_OPTION):
    """Front radii, spreading-exponent fits and the convergence report."""
    setup_logging(verbose)
    _exit(run_scenario(config, "front", out_dir, dt, T))


@app.command()
def verify(config: Path = CONFIG_OPTION, out_dir: Path = OUT_OPTION, dt: Optional[float] = DT_OPTION,
           T: Optional[float] = T_OPTION,
           tails: bool = typer.Option(False, "--tails", help="Algebraic tail slope and bracket"),
           lemma1: bool = typer.Option(False, "--lemma1", help="Scaling of L and K~ on g(a .)"),
           sandwich: bool = typer.Option(False, "--sandwich", help="Sub/super-solution envelopes"),
           heatkernel: bool = typer.Option(False, "--heatkernel", help="Two-sided heat-kernel bounds"),
           verbose: bool = VERBOSE_OPTION):
    """Run the selected checks (all of them when none is selected)."""
    setup_logging(verbose)
    flags = {"tails": tails, "lemma1": lemma1, "sandwich": sandwich, "heatkernel": heatkernel}
    checks = [name for name in CHECKS if flags[name]]
    _exit(run_scenario(config, "verify", out_dir, dt, T, checks))


@app.command()
def steady(config: Path = CONFIG_OPTION, out_dir: Path = OUT_OPTION, verbose: bool = VERBOSE_OPTION):
    """Positive periodic steady state n_plus."""
    setup_logging(verbose)
    _exit(run_scenario(config, "steady", out_dir))


if __name__ == "__main__":
    app()
