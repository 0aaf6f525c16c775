"""Command-line interface for the modified Kolmogorov studies."""

import logging
import time
from pathlib import Path
from typing import Optional, Tuple

import click
from pydantic import ValidationError

from ..analysis.export_manager import ExportManager
from ..config.logging_config import setup_logging
from ..config.settings import Settings, get_settings
from ..exceptions import ModifiedKolmogorovError
from .experiment import ConfigurationError, Report, load_experiment
from .studies import Study, run_converge, run_expand, run_invariant, run_mixing, run_simulate

logger = logging.getLogger(__name__)


@click.group()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='Experiment file (TOML or JSON)')
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), help='Output directory')
@click.option('--override', 'overrides', multiple=True, metavar='KEY=VALUE',
              help='Set a config key, e.g. resolution.K=48 (repeatable)')
@click.option('--quiet', is_flag=True, help='Only log warnings and errors')
@click.option('--env-file', type=click.Path(exists=True, dir_okay=False), help='Settings .env file')
@click.pass_context
def cli(ctx, config_path: Optional[Path], output_dir: Optional[str], overrides: Tuple[str, ...],
        quiet: bool, env_file: Optional[str]):
    """Modified Kolmogorov operators for the Euler scheme on the circle.

    Every command writes report.json, CSV tables and plot.gp to the output
    directory. Exit codes: 0 all checks pass, 1 numerical check failed,
    2 configuration error.
    """
    ctx.ensure_object(dict)

    try:
        settings = Settings(_env_file=env_file) if env_file else get_settings()
    except ValidationError as e:
        raise ConfigurationError(f"invalid settings:\n{e}") from e
    setup_logging(settings, quiet)

    ctx.obj.update(
        settings=settings,
        config_path=config_path,
        output_dir=output_dir,
        overrides=list(overrides),
        quiet=quiet,
    )


def _run(ctx: click.Context, command: str, study: Study) -> Report:
    """Load the experiment, run a study and write its artifacts; exit 1 on failed checks."""
    obj = ctx.obj
    settings: Settings = obj['settings']
    config = load_experiment(obj['config_path'], obj['overrides'], settings, obj['output_dir'])
    exporter = ExportManager(config.output_dir)
    report = Report.start(command, config, settings)

    started = time.perf_counter()
    try:
        study(config, settings, report, exporter)
    except ModifiedKolmogorovError as e:
        logger.error(f"❌ {command} stopped: {e}")
        report.check("completed", oracle="no numerical error", passed=False, detail=f"{type(e).__name__}: {e}")
    report.provenance.wall_time = time.perf_counter() - started

    exporter.export_gnuplot()
    report.files = list(exporter.written) + ["report.json"]
    exporter.export_report(report)

    if not obj['quiet']:
        for check in report.checks:
            mark = "✅" if check.passed else ("⚠️" if check.soft else "❌")
            click.echo(f"{mark} {check.name}: {check.detail or check.value}")
    status = "passed" if report.passed else "failed"
    click.echo(f"{command}: {status} ({len(report.checks)} checks, {report.provenance.wall_time:.1f}s) -> {exporter.output_dir}")
    if not report.passed:
        ctx.exit(1)
    return report


@cli.command('expand')
@click.pass_context
def expand(ctx):
    """Build A_n and L_n, dump their coefficients and check the inverse relation."""
    _run(ctx, 'expand', run_expand)


@cli.command('invariant')
@click.pass_context
def invariant(ctx):
    """Solve for rho and mu_n and compare with the kernel invariant density."""
    _run(ctx, 'invariant', run_invariant)


@cli.command('converge')
@click.pass_context
def converge(ctx):
    """Run the one-step, Taylor, residual and long-time sweeps and fit slopes."""
    _run(ctx, 'converge', run_converge)


@cli.command('simulate')
@click.pass_context
def simulate(ctx):
    """Run the Monte Carlo battery against the kernel oracle."""
    _run(ctx, 'simulate', run_simulate)


@cli.command('mixing')
@click.pass_context
def mixing(ctx):
    """Fit exponential decay rates of the semigroup and the discrete kernel."""
    _run(ctx, 'mixing', run_mixing)


@cli.command('show-config')
@click.pass_context
def show_config(ctx):
    """Print the validated experiment config with all defaults filled in."""
    obj = ctx.obj
    config = load_experiment(obj['config_path'], obj['overrides'], obj['settings'], obj['output_dir'])
    click.echo(config.model_dump_json(indent=2))
    click.echo(f"# hash {config.config_hash()}")


if __name__ == '__main__':
    cli()
