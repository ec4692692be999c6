"""CLI entry point for smoothcfie."""

from __future__ import annotations

import functools
import logging
import sys

import click

from smoothcfie import SmoothCfieError
from smoothcfie.config import ConfigError, thread_count
from smoothcfie.quadrature import DiscretizationError
from smoothcfie.scenarios import load_scenario, run_convergence, run_nearfield, run_separation, run_solve
from smoothcfie.selftest import run_selftest
from smoothcfie.validator import ValidationError

_METHODS = ("TR", "MK", "KR6", "KR10")


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


def _override_options(func):
    """Scenario keys that can be overridden on the command line."""
    options = [
        click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Scenario file"),
        click.option("--n", type=int, default=None, help="Half node count (2n nodes per obstacle)"),
        click.option("--method", type=click.Choice(_METHODS, case_sensitive=False), default=None, help="Quadrature rule"),
        click.option("--k", type=float, default=None, help="Wavenumber"),
        click.option("--eta", type=float, default=None, help="Coupling parameter (defaults to k)"),
        click.option("--bc", type=click.Choice(["dirichlet", "neumann"]), default=None, help="Boundary condition"),
        click.option("--formulation", type=click.Choice(["smoothed", "classic"]), default=None, help="Integral equation"),
        click.option("--mesh-p", "mesh_p", type=int, default=None, help="Graded mesh exponent (0 = uniform)"),
        click.option("--out-dir", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory"),
        click.option("--gmres-tol", "gmres_tol", type=float, default=None, help="GMRES relative tolerance"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(config_path: str, overrides: dict):
    method = overrides.get("method")
    if method is not None:
        overrides = {**overrides, "method": method.upper()}
    try:
        return load_scenario(config_path, overrides), thread_count()
    except (ConfigError, ValidationError) as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)


def _guard(func):
    """Map library errors raised while running a scenario to exit statuses."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, ValidationError, DiscretizationError) as exc:
            click.echo(f"ERROR: {exc}", err=True)
            sys.exit(1)
        except SmoothCfieError as exc:
            click.echo(f"ERROR: {exc}", err=True)
            sys.exit(2)

    return wrapper


@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress to stderr (-vv for debug detail)")
def main(verbose: int) -> None:
    """smoothcfie: smoothed combined field integral equation solver."""
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
        )


@main.command("solve")
@_override_options
@_guard
def solve_command(config_path: str, **overrides) -> None:
    """Solve one scattering problem and write density, far-field and report files."""
    # ── 1. Load and validate the scenario ────────────────────────────────────
    scenario, threads = _load(config_path, overrides)

    # ── 2. Assemble, solve, write artifacts ──────────────────────────────────
    report = run_solve(scenario, threads=threads)
    click.echo(
        f"{scenario.name}: {report['unknowns']} unknowns, "
        f"{report['iterations']} GMRES iterations -> {scenario.out_dir}"
    )
    if "exact_farfield_error" in report:
        click.echo(f"far-field error vs exact solution: {report['exact_farfield_error']:.3e}")

    # ── 3. Exit status reflects solver convergence ───────────────────────────
    if not report["converged"]:
        click.echo("ERROR: GMRES did not converge", err=True)
        sys.exit(2)
    sys.exit(0)


@main.command("converge")
@_override_options
@click.option("--n-list", "n_list", default=None, help="Comma-separated increasing n values")
@click.option("--reference-multiplier", type=int, default=None, help="Reference n = multiplier x largest n")
@click.option("--separations", default=None, help="Comma-separated gaps d for a two-obstacle sweep at fixed n")
@_guard
def converge_command(
    config_path: str,
    n_list: str | None,
    reference_multiplier: int | None,
    separations: str | None,
    **overrides,
) -> None:
    """Far-field convergence in n, or in the gap between two obstacles with --separations."""
    if (n_list is None) == (separations is None):
        click.echo("ERROR: give exactly one of --n-list or --separations", err=True)
        sys.exit(1)

    # ── 1. Load and validate the scenario ────────────────────────────────────
    scenario, threads = _load(config_path, overrides)

    # ── 2. Run the sweep ─────────────────────────────────────────────────────
    if separations is not None:
        report = run_separation(scenario, _float_list(separations), threads=threads)
        for d, eps, its in zip(report["separations"], report["eps_inf"], report["iterations"]):
            click.echo(f"d={d:.1e}  eps_inf={eps:.3e}  iterations={its}")
    else:
        values = [int(v) for v in _float_list(n_list)]
        report = run_convergence(scenario, values, reference_multiplier, threads=threads)
        for n, eps, its in zip(report["n_list"], report["eps_inf"], report["iterations"]):
            click.echo(f"n={n}  eps_inf={eps:.3e}  iterations={its}")
        if report["slope"] is not None:
            click.echo(f"log-log slope: {report['slope']:.2f}")

    if not report["converged"]:
        click.echo("ERROR: GMRES did not converge at every sweep point", err=True)
        sys.exit(2)
    sys.exit(0)


@main.command("nearfield")
@_override_options
@click.option("--bbox", required=True, help="xmin,xmax,ymin,ymax")
@click.option("--resolution", type=int, default=101, show_default=True, help="Samples per dimension")
@click.option("--smoothed/--plain", default=True, show_default=True, help="Potential evaluation mode")
@click.option("--total", is_flag=True, default=False, help="Add the incident field")
@_guard
def nearfield_command(
    config_path: str,
    bbox: str,
    resolution: int,
    smoothed: bool,
    total: bool,
    **overrides,
) -> None:
    """Sample the scattered (or total) field on a grid; error grid when the exact solution is known."""
    box = _float_list(bbox)
    if len(box) != 4:
        click.echo(f"ERROR: --bbox needs four numbers, got {bbox!r}", err=True)
        sys.exit(1)
    if box[0] >= box[1] or box[2] >= box[3]:
        click.echo(f"ERROR: --bbox must satisfy xmin < xmax and ymin < ymax, got {bbox!r}", err=True)
        sys.exit(1)
    if resolution < 2:
        click.echo(f"ERROR: --resolution must be at least 2, got {resolution}", err=True)
        sys.exit(1)

    # ── 1. Load and validate the scenario ────────────────────────────────────
    scenario, threads = _load(config_path, overrides)

    # ── 2. Solve and sample ──────────────────────────────────────────────────
    report = run_nearfield(scenario, box, resolution, smoothed=smoothed, total=total, threads=threads)
    click.echo(
        f"{report['exterior_samples']} exterior / {report['masked_samples']} masked samples -> {scenario.out_dir}"
    )
    if report.get("max_log10_error") is not None:
        click.echo(f"max log10 error: {report['max_log10_error']:.2f}")

    if not report["converged"]:
        click.echo("ERROR: GMRES did not converge", err=True)
        sys.exit(2)
    sys.exit(0)


@main.command("selftest")
@click.option("--suite", "suites", multiple=True, help="Run only the named suite (repeatable)")
def selftest_command(suites: tuple[str, ...]) -> None:
    """Run the built-in invariant suites; prints one SUITE line per suite."""
    results = run_selftest(list(suites) or None)
    for result in results:
        click.echo(result.line())
    failed = [r for r in results if not r.passed]
    for result in failed:
        click.echo(f"WARNING: {result.name}: {result.detail}", err=True)
    sys.exit(2 if failed else 0)
