#!/usr/bin/env python3
"""Command line entry point for the discrete cmc construction pipeline."""

import sys
from collections.abc import Callable
from typing import Any

import click
import yaml
from loguru import logger

from src import __version__
from src.config import Config, LoggingConfig
from src.core.error_handler import ErrorHandler
from src.core.exceptions import CmcError, ConfigurationError
from src.export import load_graph
from src.pipeline import Pipeline
from src.quadgraph import validate as check_graph

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)


def _setup_logging(logging_config: LoggingConfig, verbose: bool = False) -> None:
    """Set up logging configuration."""
    level = "DEBUG" if verbose else logging_config.level

    # Remove default logger
    logger.remove()

    logger.add(sys.stderr, level=level, format=LOG_FORMAT)

    if logging_config.file:
        logger.add(
            logging_config.file,
            level=level,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            rotation=logging_config.rotation,
            retention=logging_config.retention,
        )


def _fail(error: CmcError, handler: ErrorHandler | None = None) -> None:
    handler = handler or ErrorHandler()
    click.echo(f"Error: {error}", err=True)
    sys.exit(handler.exit_code_for(error))


def _apply_tolerance(config: Config, item: str) -> None:
    key, _, value = item.partition("=")
    if not key or not value:
        raise ConfigurationError(
            f"Tolerance override must look like KEY=VALUE: {item!r}",
            config_key="tolerance",
        )
    try:
        number = float(value)
    except ValueError:
        raise ConfigurationError(
            f"Tolerance override {key} is not a number: {value!r}",
            config_key=key,
        )
    # Bare keys name verification check families
    target = key if "." in key else f"verify.tolerances.{key}"
    config.override(target, number)


def _load(
    config_path: str, output: str | None, tolerances: tuple[str, ...], verbose: bool
) -> Config:
    try:
        config = Config(config_path)
        if output:
            config.override("output.directory", output)
        for item in tolerances:
            _apply_tolerance(config, item)
    except ConfigurationError as e:
        _setup_logging(LoggingConfig(), verbose)
        ErrorHandler().handle_error(e)
        _fail(e)
    _setup_logging(config.pipeline.logging, verbose)
    return config


def pipeline_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every stage command."""
    func = click.option("--verbose", "-v", is_flag=True, help="Debug logging")(func)
    func = click.option(
        "--tolerance",
        "-t",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a tolerance (dotted config key or verification check)",
    )(func)
    func = click.option("--output", "-o", default=None, help="Output directory")(func)
    func = click.option(
        "--config", "-c", default="config.yaml", help="Configuration file path"
    )(func)
    return func


def _run_stage(
    until: str, config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool
) -> None:
    app_config = _load(config, output, tolerance, verbose)
    pipeline = Pipeline(app_config)
    try:
        artifacts = pipeline.run(until=until)
    except CmcError as e:
        _fail(e, pipeline.error_handler)

    click.echo(yaml.safe_dump(artifacts.summary(), sort_keys=True), nl=False)
    for name, path in sorted(artifacts.files.items()):
        click.echo(f"  {name}: {path}")
    if artifacts.report is not None and not artifacts.report.passed:
        click.echo("Verification failed", err=True)
        sys.exit(2)


@click.group()
@click.version_option(__version__, prog_name="discrete-cmc")
def cli() -> None:
    """Discrete constant mean curvature surfaces from orthogonal ring patterns."""
    pass


@cli.command()
@pipeline_options
def solve(config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool) -> None:
    """Solve the ring pattern boundary value problem."""
    _run_stage("solve", config, output, tolerance, verbose)


@cli.command()
@pipeline_options
def embed(config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool) -> None:
    """Solve and lay out the ring pattern."""
    _run_stage("embed", config, output, tolerance, verbose)


@cli.command()
@pipeline_options
def lift(config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool) -> None:
    """Lift the ring pattern to a two-sphere Koebe net."""
    _run_stage("lift", config, output, tolerance, verbose)


@cli.command()
@pipeline_options
def build(config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool) -> None:
    """Build the cmc surface pair and its curvatures."""
    _run_stage("build", config, output, tolerance, verbose)


@cli.command()
@pipeline_options
def verify(config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool) -> None:
    """Build everything and run every invariant check."""
    _run_stage("verify", config, output, tolerance, verbose)


@cli.command()
@pipeline_options
def pipeline(
    config: str, output: str | None, tolerance: tuple[str, ...], verbose: bool
) -> None:
    """Run all stages and write every artifact."""
    _run_stage("export", config, output, tolerance, verbose)


@cli.command("search-q")
@pipeline_options
@click.option("--low", type=float, default=None, help="Lower end of the q bracket")
@click.option("--high", type=float, default=None, help="Upper end of the q bracket")
def search_q_command(
    config: str,
    output: str | None,
    tolerance: tuple[str, ...],
    verbose: bool,
    low: float | None,
    high: float | None,
) -> None:
    """Tune q to the configured closing criterion."""
    app_config = _load(config, output, tolerance, verbose)
    if low is not None or high is not None:
        bracket = app_config.pipeline.search.bracket
        try:
            app_config.override(
                "search.bracket",
                [low if low is not None else bracket[0], high if high is not None else bracket[1]],
            )
        except ConfigurationError as e:
            _fail(e)
    app_config.override("q", "search")
    pipeline = Pipeline(app_config)
    try:
        artifacts = pipeline.run(until="search", write=False)
    except CmcError as e:
        _fail(e, pipeline.error_handler)
    click.echo(f"q = {artifacts.q:.10f}")


@cli.command("validate-graph")
@click.argument("path", type=click.Path())
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
def validate_graph(path: str, verbose: bool) -> None:
    """Check a serialized S-quad graph."""
    _setup_logging(LoggingConfig(), verbose)
    try:
        g = load_graph(path)
    except CmcError as e:
        _fail(e)
    violations = check_graph(g)
    if violations:
        for violation in violations:
            click.echo(violation)
        sys.exit(4)
    click.echo(f"Graph is valid: {g.n_vertices} vertices, {len(g.quads)} quads")


if __name__ == "__main__":
    cli()
