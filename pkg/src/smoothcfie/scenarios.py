"""Experiment drivers: scenario loading, single solves, sweeps and near-field grids.

Every driver writes its artifacts below the scenario's output directory and
returns the report it wrote, so callers (the CLI, tests) can act on it without
reading files back.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from smoothcfie import __version__
from smoothcfie.config import ConfigError, apply_overrides, parse_scenario_file, thread_count
from smoothcfie.discretization import DiscreteSystem, Problem, assemble
from smoothcfie.fields import FarField, IncidentField, Scene, farfield_error, grid_far_field, near_grid
from smoothcfie.geometry import GradedMesh, ParametricCurve
from smoothcfie.linsolve import DEFAULT_TOL, SolveReport, gmres
from smoothcfie.quadrature import Method, Quadrature
from smoothcfie.validator import ValidationError, validate_scenario_dict
from smoothcfie.writer import write_csv, write_json

logger = logging.getLogger(__name__)

DEFAULT_REFERENCE_MULTIPLIER = 8
DEFAULT_DIRECTIONS = 360


@dataclass(frozen=True)
class ObstacleSpec:
    shape: str
    params: dict[str, float] = field(default_factory=dict)
    offset: tuple[float, float] = (0.0, 0.0)
    mirror: bool = False

    def curve(self) -> ParametricCurve:
        return ParametricCurve(self.shape, dict(self.params), self.offset, self.mirror)


def _gap_shift(x: float, d: float | None) -> float:
    """Horizontal move that opens a gap of width d along the line x = 0."""
    if not d or x == 0.0:
        return 0.0
    return -0.5 * d if x < 0.0 else 0.5 * d


@dataclass(frozen=True)
class Scenario:
    """A fully resolved experiment: obstacles, problem, discretization and outputs."""

    name: str
    obstacles: tuple[ObstacleSpec, ...]
    bc: str
    formulation: str
    method: Method
    n: int
    mesh_p: int
    k: float
    eta: float
    incident: IncidentField
    gmres_tol: float = DEFAULT_TOL
    max_iter: int | None = None
    n_dirs: int = DEFAULT_DIRECTIONS
    separation: float | None = None
    reference_multiplier: int = DEFAULT_REFERENCE_MULTIPLIER
    reference_method: Method | None = None
    out_dir: Path = Path("out")
    prefix: str = ""

    @property
    def problem(self) -> Problem:
        return Problem.from_names(self.bc, self.formulation)

    @property
    def quadrature(self) -> Quadrature:
        return Quadrature(self.method, self.n)

    @property
    def mesh(self) -> GradedMesh:
        return GradedMesh(self.mesh_p)

    @property
    def exact_available(self) -> bool:
        return self.incident.kind == "point_source"

    def curves(self) -> list[ParametricCurve]:
        out = []
        for spec in self.obstacles:
            curve = spec.curve()
            out.append(curve.shifted(_gap_shift(spec.offset[0], self.separation)))
        return out

    def incident_field(self) -> IncidentField:
        if self.incident.kind != "point_source" or not self.separation:
            return self.incident
        return self.incident.shifted_sources(lambda x, y: (_gap_shift(x, self.separation), 0.0))

    def output_path(self, name: str) -> Path:
        return self.out_dir / f"{self.prefix}{name}"

    def describe(self) -> dict:
        return {
            "name": self.name,
            "problem": self.problem.value,
            "bc": self.bc,
            "formulation": self.formulation,
            "method": self.method.value,
            "n": self.n,
            "mesh_p": self.mesh_p,
            "k": self.k,
            "eta": self.eta,
            "incident": self.incident.kind,
            "obstacles": [o.shape for o in self.obstacles],
            "separation": self.separation,
        }


def scenario_from_dict(data: dict) -> Scenario:
    """Build a Scenario from a validated scenario dict, filling in defaults."""
    problem = data["problem"]
    disc = data["discretization"]
    output = data.get("output", {})
    k = float(problem["k"])
    if problem.get("incident", "plane_wave") == "point_source":
        incident = IncidentField.point_sources(k, problem["sources"], problem.get("source_sign", -1.0))
    else:
        incident = IncidentField.plane_wave(k, problem.get("angle", 0.0))
    reference_method = disc.get("reference_method")
    return Scenario(
        name=problem.get("name", "scenario"),
        obstacles=tuple(
            ObstacleSpec(o["shape"], dict(o["params"]), tuple(o["offset"]), bool(o["mirror"]))
            for o in data["obstacles"]
        ),
        bc=problem["bc"],
        formulation=problem.get("formulation", "smoothed"),
        method=Method(disc["method"]),
        n=int(disc["n"]),
        mesh_p=int(disc.get("mesh_p", 0)),
        k=k,
        eta=float(problem.get("eta", k)),
        incident=incident,
        gmres_tol=float(disc.get("gmres_tol", DEFAULT_TOL)),
        max_iter=disc.get("max_iter"),
        n_dirs=int(disc.get("n_dirs", DEFAULT_DIRECTIONS)),
        separation=problem.get("separation"),
        reference_multiplier=int(disc.get("reference_multiplier", DEFAULT_REFERENCE_MULTIPLIER)),
        reference_method=Method(reference_method) if reference_method else None,
        out_dir=Path(output.get("dir", "out")),
        prefix=output.get("prefix", ""),
    )


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    """Parse, override, validate and build a scenario from a file."""
    data = apply_overrides(parse_scenario_file(path), overrides or {})
    validate_scenario_dict(data)
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# Single solve
# ---------------------------------------------------------------------------


@dataclass
class SolveOutcome:
    scenario: Scenario
    system: DiscreteSystem
    report: SolveReport
    far_field: FarField
    timings: dict[str, float]

    @property
    def density(self) -> np.ndarray:
        return self.report.solution

    def scene(self) -> Scene:
        return Scene.from_system(self.system, self.density, self.scenario.incident_field())

    def exact_error(self) -> float | None:
        if not self.scenario.exact_available:
            return None
        return farfield_error(self.far_field, exact_far_field(self.scenario, self.far_field))


def exact_far_field(scenario: Scenario, like: FarField) -> FarField:
    incident = scenario.incident_field()
    return FarField(like.angles, like.directions, incident.exact_far_field(like.directions))


def solve(scenario: Scenario, threads: int | None = None) -> SolveOutcome:
    """Assemble, solve with GMRES and evaluate the far field."""
    threads = thread_count() if threads is None else threads
    started = time.perf_counter()
    system = assemble(
        scenario.problem,
        scenario.curves(),
        scenario.quadrature,
        scenario.mesh,
        scenario.k,
        scenario.eta,
        scenario.incident_field(),
        threads=threads,
    )
    assembled = time.perf_counter()
    report = gmres(system.matrix, system.rhs, tol=scenario.gmres_tol, max_iter=scenario.max_iter)
    solved = time.perf_counter()
    far = grid_far_field(system.grids, report.solution, scenario.k, scenario.eta, scenario.n_dirs)
    done = time.perf_counter()
    if not report.converged:
        logger.warning(
            "%s: GMRES did not reach tol %.1e (n=%d, residual %.3e)",
            scenario.name,
            scenario.gmres_tol,
            scenario.n,
            report.relative_residual,
        )
    timings = {
        "assemble_s": assembled - started,
        "solve_s": solved - assembled,
        "farfield_s": done - solved,
    }
    return SolveOutcome(scenario, system, report, far, timings)


def run_solve(scenario: Scenario, threads: int | None = None) -> dict:
    """Solve once and write the density, far-field and report artifacts."""
    outcome = solve(scenario, threads)
    system = outcome.system

    density_rows = []
    for index, (grid, phi) in enumerate(zip(system.grids, system.split(outcome.density))):
        for s, t, value in zip(grid.nodes, grid.parameters, phi):
            density_rows.append((index + 1, s, t, value.real, value.imag))
    write_csv(scenario.output_path("density.csv"), ("obstacle", "s", "t", "re", "im"), density_rows)

    far = outcome.far_field
    write_csv(
        scenario.output_path("farfield.csv"),
        ("angle_deg", "re", "im"),
        zip(far.angles_deg, far.values.real, far.values.imag),
    )

    report = {
        "tool_version": __version__,
        "scenario": scenario.describe(),
        "unknowns": int(system.matrix.shape[0]),
        "iterations": outcome.report.iterations,
        "converged": outcome.report.converged,
        "gmres_tol": scenario.gmres_tol,
        "residual_history": outcome.report.residual_history,
        "timings": outcome.timings,
    }
    exact = outcome.exact_error()
    if exact is not None:
        report["exact_farfield_error"] = exact
    write_json(report, scenario.output_path("solve_report.json"))
    logger.info(
        "%s: %d iterations, converged=%s", scenario.name, outcome.report.iterations, outcome.report.converged
    )
    return report


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def loglog_slope(h: Sequence[float], errors: Sequence[float]) -> float | None:
    """Least-squares slope of log(error) against log(h), over positive errors."""
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > 0.0
    if np.count_nonzero(keep) < 2:
        return None
    return float(np.polyfit(np.log(h[keep]), np.log(errors[keep]), 1)[0])


def _reference(scenario: Scenario, finest_n: int, multiplier: int, threads: int) -> tuple[str, FarField | None]:
    if scenario.exact_available:
        return "exact", None
    method = scenario.reference_method or scenario.method
    ref_scenario = replace(scenario, n=finest_n * multiplier, method=method)
    logger.info("reference solve: %s n=%d", method.value, ref_scenario.n)
    return f"{method.value} n={ref_scenario.n}", solve(ref_scenario, threads).far_field


def _error_against(outcome: SolveOutcome, reference: FarField | None) -> float:
    if reference is None:
        return outcome.exact_error()
    return farfield_error(outcome.far_field, reference)


def run_convergence(
    scenario: Scenario,
    n_list: Sequence[int],
    reference_multiplier: int | None = None,
    threads: int | None = None,
) -> dict:
    """Far-field errors over a list of n and the fitted log-log slope."""
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
        raise ConfigError(f"n list must be positive and strictly increasing, got {n_list}")
    threads = thread_count() if threads is None else threads
    multiplier = reference_multiplier or scenario.reference_multiplier
    reference_kind, reference = _reference(scenario, n_list[-1], multiplier, threads)

    rows = []
    all_converged = True
    for n in n_list:
        started = time.perf_counter()
        outcome = solve(replace(scenario, n=n), threads)
        elapsed = time.perf_counter() - started
        eps = _error_against(outcome, reference)
        all_converged &= outcome.report.converged
        rows.append((n, np.pi / n, eps, outcome.report.iterations, elapsed))
        logger.info("n=%d eps_inf=%.3e iterations=%d", n, eps, outcome.report.iterations)

    slope = loglog_slope([r[1] for r in rows], [r[2] for r in rows])
    write_csv(
        scenario.output_path("convergence.csv"),
        ("n", "h", "eps_inf", "iterations", "wall_time"),
        rows,
    )
    report = {
        "tool_version": __version__,
        "scenario": scenario.describe(),
        "reference": reference_kind,
        "n_list": n_list,
        "eps_inf": [r[2] for r in rows],
        "iterations": [r[3] for r in rows],
        "slope": slope,
        "converged": all_converged,
    }
    write_json(report, scenario.output_path("convergence_report.json"))
    return report


def run_separation(
    scenario: Scenario,
    separations: Sequence[float],
    threads: int | None = None,
) -> dict:
    """Far-field errors at fixed n as the gap between two obstacles closes."""
    if len(scenario.obstacles) != 2:
        raise ValidationError(f"separation sweeps need exactly two obstacles, got {len(scenario.obstacles)}")
    separations = [float(d) for d in separations]
    if not separations or any(d < 0.0 for d in separations):
        raise ConfigError(f"separations must be non-negative, got {separations}")
    threads = thread_count() if threads is None else threads

    rows = []
    all_converged = True
    reference_kind = "exact"
    for d in separations:
        current = replace(scenario, separation=d)
        reference_kind, reference = _reference(current, current.n, current.reference_multiplier, threads)
        started = time.perf_counter()
        outcome = solve(current, threads)
        elapsed = time.perf_counter() - started
        eps = _error_against(outcome, reference)
        all_converged &= outcome.report.converged
        rows.append((d, eps, outcome.report.iterations, elapsed))
        logger.info("d=%.1e eps_inf=%.3e iterations=%d", d, eps, outcome.report.iterations)

    write_csv(
        scenario.output_path("separation.csv"),
        ("d", "eps_inf", "iterations", "wall_time"),
        rows,
    )
    report = {
        "tool_version": __version__,
        "scenario": scenario.describe(),
        "reference": reference_kind,
        "separations": separations,
        "eps_inf": [r[1] for r in rows],
        "iterations": [r[2] for r in rows],
        "converged": all_converged,
    }
    write_json(report, scenario.output_path("separation_report.json"))
    return report


# ---------------------------------------------------------------------------
# Near field
# ---------------------------------------------------------------------------


def run_nearfield(
    scenario: Scenario,
    bbox: Sequence[float],
    resolution,
    smoothed: bool = True,
    total: bool = False,
    threads: int | None = None,
) -> dict:
    """Solve, then sample the field on a grid; writes an error grid when the exact solution is known."""
    threads = thread_count() if threads is None else threads
    outcome = solve(scenario, threads)
    grid = near_grid(outcome.scene(), bbox, resolution, smoothed=smoothed, total=total, threads=threads)

    points = grid.points().reshape(-1, 2)
    values = grid.values.ravel()
    mask = grid.mask.ravel()
    write_csv(
        scenario.output_path("nearfield.csv"),
        ("x", "y", "re", "im", "mask"),
        zip(points[:, 0], points[:, 1], values.real, values.imag, mask),
    )

    report = {
        "tool_version": __version__,
        "scenario": scenario.describe(),
        "bbox": [float(v) for v in grid.bbox],
        "resolution": list(grid.resolution),
        "smoothed": smoothed,
        "total": total,
        "masked_samples": int(np.count_nonzero(mask)),
        "exterior_samples": int(np.count_nonzero(~mask)),
        "iterations": outcome.report.iterations,
        "converged": outcome.report.converged,
    }

    if scenario.exact_available:
        incident = scenario.incident_field()
        exterior = ~mask
        exact = np.zeros(len(points), dtype=complex)
        exact[exterior] = incident.exact_scattered(points[exterior])
        if total:
            exact[exterior] += incident.value(points[exterior])
        errors = grid.log10_error(exact.reshape(grid.values.shape)).ravel()
        write_csv(
            scenario.output_path("nearfield_error.csv"),
            ("x", "y", "log10_abs_err"),
            zip(points[exterior, 0], points[exterior, 1], errors[exterior]),
        )
        report["max_log10_error"] = float(errors[exterior].max()) if np.any(exterior) else None

    write_json(report, scenario.output_path("nearfield_report.json"))
    return report
