"""Command line entry point: single runs, table reproduction, verification suites and field dumps."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from .harness import (
    ExperimentConfig,
    build_operator,
    cells_to_csv,
    dump_field,
    parse_source,
    report_to_csv,
    reproduce_table,
    run_experiment,
    solve_field,
    within_tolerance,
)
from .mesh import ConfigError
from .verification import SUITES, verify_suite

EXIT_SUITE_FAILED = 2
EXIT_CONFIG = 3


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_json(text)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Sweeping-type preconditioners for the layered Helmholtz problem."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@click.option("--config", "config_path", required=True, help="JSON experiment configuration.")
@click.option("--out", help="CSV output file (stdout when omitted).")
@click.option("--timing", is_flag=True, help="Fill the wall_ms column (makes output non-reproducible).")
def run(config_path: str, out: str | None, timing: bool) -> None:
    """Run one preconditioned solve and write its report row."""
    cfg = _load_config(config_path)
    report = run_experiment(cfg)
    if report.error:
        click.echo(f"build failed: {report.error}", err=True)
    _emit(report_to_csv(cfg, report, timing), out)


@cli.command()
@click.option("--id", "table_id", required=True, type=int, help="Table number 1-4.")
@click.option("--h", "inverse_h", required=True, type=click.Choice(["64", "128"]), help="Inverse mesh width.")
@click.option("--out", help="CSV output file (stdout when omitted).")
@click.option("--timing", is_flag=True, help="Fill the wall_ms column (makes output non-reproducible).")
def table(table_id: int, inverse_h: str, out: str | None, timing: bool) -> None:
    """Regenerate one table half and report cells outside the published counts."""
    cells = reproduce_table(table_id, int(inverse_h))
    _emit(cells_to_csv(cells, timing), out)
    misses = [cell for cell in cells if not within_tolerance(cell)]
    click.echo(f"{len(cells) - len(misses)}/{len(cells)} cells match the published counts", err=True)


@cli.command()
@click.option("--suite", required=True, type=click.Choice(SUITES), help="Suite to run.")
@click.option("--out", help="JSON report file (stdout when omitted).")
def verify(suite: str, out: str | None) -> None:
    """Run a verification suite; exit status 2 if any check fails."""
    report = verify_suite(suite)
    for line in report.lines():
        click.echo(line, err=True)
    _emit(report.to_json() + "\n", out)
    if not report.passed:
        sys.exit(EXIT_SUITE_FAILED)


@cli.command()
@click.option("--config", "config_path", required=True, help="JSON experiment configuration.")
@click.option("--source", required=True, help="point:i,j or random:seed.")
@click.option("--out", required=True, help="CSV field file.")
@click.option("--pml/--no-pml", "include_pml", default=True, help="Include PML unknowns.")
def dump(config_path: str, source: str, out: str, include_pml: bool) -> None:
    """Solve directly for one source and write the field."""
    cfg = _load_config(config_path)
    op = build_operator(cfg)
    u = solve_field(op, parse_source(op, source))
    dump_field(op, u, out, include_pml)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return EXIT_CONFIG
    except click.UsageError as exc:
        exc.show()
        return EXIT_CONFIG
    except click.exceptions.Abort:
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
