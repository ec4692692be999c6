"""Tests for the smoothcfie command line."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from smoothcfie import quadrature
from smoothcfie.cli import main
from smoothcfie.selftest import SUITES


def _out_dir(path: Path) -> Path:
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("dir = "):
            return Path(line.removeprefix("dir = "))
    raise AssertionError(f"no output dir in {path}")


# ---------------------------------------------------------------------------
# Test 1: selftest
# ---------------------------------------------------------------------------


def test_selftest_passes():
    result = CliRunner().invoke(main, ["selftest"])
    assert result.exit_code == 0, f"selftest failed: {result.output}"
    lines = result.stdout.strip().splitlines()
    assert lines == [f"SUITE {name} PASS" for name in SUITES]


def test_selftest_single_suite():
    result = CliRunner().invoke(main, ["selftest", "--suite", "gmres"])
    assert result.exit_code == 0
    assert result.stdout.strip() == "SUITE gmres PASS"


def test_selftest_reports_broken_rule(monkeypatch):
    monkeypatch.setattr(quadrature, "mk_weights", lambda n: np.zeros(2 * n))
    result = CliRunner().invoke(main, ["selftest", "--suite", "mk_weights", "--suite", "wronskian"])
    assert result.exit_code == 2
    assert result.stdout.strip().splitlines() == ["SUITE mk_weights FAIL", "SUITE wronskian PASS"]
    assert "WARNING: mk_weights:" in result.stderr


def test_selftest_unknown_suite_fails():
    result = CliRunner().invoke(main, ["selftest", "--suite", "nonexistent"])
    assert result.exit_code == 2
    assert "SUITE nonexistent FAIL" in result.stdout


# ---------------------------------------------------------------------------
# Test 2: solve
# ---------------------------------------------------------------------------


def test_solve_writes_outputs(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text)
    result = CliRunner().invoke(main, ["solve", "--config", str(path)])
    assert result.exit_code == 0, f"solve failed: {result.output}"
    assert "48 unknowns" in result.stdout
    assert "far-field error vs exact solution" in result.stdout

    out = _out_dir(path)
    for name in ("density.csv", "farfield.csv", "solve_report.json"):
        assert (out / name).is_file(), f"missing {name}"
    report = json.loads((out / "solve_report.json").read_text(encoding="utf-8"))
    assert report["converged"]
    assert report["exact_farfield_error"] < 1e-5


def test_solve_is_byte_identical_across_runs(scenario_file, circle_scenario_text, tmp_path):
    path = scenario_file(circle_scenario_text)
    runner = CliRunner()
    outputs = []
    for run in (1, 2):
        out = tmp_path / f"run{run}"
        result = runner.invoke(main, ["solve", "--config", str(path), "--out-dir", str(out)])
        assert result.exit_code == 0, f"Run {run} failed: {result.output}"
        outputs.append(out)
    for name in ("density.csv", "farfield.csv"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes(), f"{name} differs"


def test_solve_overrides(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text)
    result = CliRunner().invoke(
        main, ["solve", "--config", str(path), "--n", "16", "--method", "kr6", "--bc", "neumann"]
    )
    assert result.exit_code == 0, f"solve failed: {result.output}"
    report = json.loads((_out_dir(path) / "solve_report.json").read_text(encoding="utf-8"))
    assert report["scenario"]["method"] == "KR6"
    assert report["scenario"]["problem"] == "SN"
    assert report["unknowns"] == 32


def test_solve_reports_non_convergence(scenario_file, circle_scenario_text):
    text = circle_scenario_text.replace("sources = 0 0", "sources = 0.3 0.2").replace(
        "n_dirs = 36\n", "n_dirs = 36\nmax_iter = 1\n"
    )
    path = scenario_file(text)
    result = CliRunner().invoke(main, ["solve", "--config", str(path), "--gmres-tol", "1e-14"])
    assert result.exit_code == 2
    assert "ERROR: GMRES did not converge" in result.stderr
    assert (_out_dir(path) / "solve_report.json").is_file()


# ---------------------------------------------------------------------------
# Test 3: Invalid scenarios → exit 1
# ---------------------------------------------------------------------------


def _assert_invalid(runner: CliRunner, args: list[str], message: str) -> None:
    result = runner.invoke(main, args)
    assert result.exit_code == 1, f"Expected exit code 1, got {result.exit_code}"
    assert result.stderr.startswith("ERROR: "), f"Unexpected stderr: {result.stderr!r}"
    assert message in result.stderr


def test_invalid_corner_without_grading(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text.replace("shape = circle\nradius = 1\n", "shape = drop\n"))
    _assert_invalid(CliRunner(), ["solve", "--config", str(path)], "needs discretization.mesh_p >= 2")


def test_invalid_parse_error(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text.replace("k = 2", "k = two"))
    _assert_invalid(CliRunner(), ["solve", "--config", str(path)], "bad value for 'k'")


def test_invalid_override(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text)
    _assert_invalid(
        CliRunner(),
        ["solve", "--config", str(path), "--method", "TR", "--formulation", "classic"],
        "TR is only available with formulation = smoothed",
    )


def test_invalid_thread_count(scenario_file, circle_scenario_text, monkeypatch):
    monkeypatch.setenv("SMOOTHCFIE_THREADS", "many")
    path = scenario_file(circle_scenario_text)
    _assert_invalid(CliRunner(), ["solve", "--config", str(path)], "SMOOTHCFIE_THREADS")


def test_missing_config_is_a_usage_error(tmp_path):
    result = CliRunner().invoke(main, ["solve", "--config", str(tmp_path / "absent.cfg")])
    assert result.exit_code == 2
    assert "does not exist" in result.output


# ---------------------------------------------------------------------------
# Test 4: converge
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("extra", [[], ["--n-list", "4,8", "--separations", "0.1"]])
def test_converge_needs_exactly_one_sweep(scenario_file, circle_scenario_text, extra):
    path = scenario_file(circle_scenario_text)
    _assert_invalid(CliRunner(), ["converge", "--config", str(path), *extra], "exactly one of")


def test_converge_over_n(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text.replace("sources = 0 0", "sources = 0.3 0.2"))
    result = CliRunner().invoke(main, ["converge", "--config", str(path), "--n-list", "4,6,8"])
    assert result.exit_code == 0, f"converge failed: {result.output}"
    assert result.stdout.count("eps_inf=") == 3
    assert "log-log slope" in result.stdout
    report = json.loads((_out_dir(path) / "convergence_report.json").read_text(encoding="utf-8"))
    assert report["n_list"] == [4, 6, 8]


def test_converge_rejects_unsorted_n_list(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text)
    _assert_invalid(CliRunner(), ["converge", "--config", str(path), "--n-list", "8,4"], "strictly increasing")


def test_separation_needs_two_obstacles(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text)
    _assert_invalid(
        CliRunner(), ["converge", "--config", str(path), "--separations", "0.1,0.01"], "exactly two obstacles"
    )


# ---------------------------------------------------------------------------
# Test 5: nearfield
# ---------------------------------------------------------------------------


def test_nearfield_writes_grids(scenario_file, circle_scenario_text):
    path = scenario_file(circle_scenario_text)
    result = CliRunner().invoke(
        main, ["nearfield", "--config", str(path), "--bbox", "-2.2,2.2,-2.2,2.2", "--resolution", "5"]
    )
    assert result.exit_code == 0, f"nearfield failed: {result.output}"
    assert "24 exterior / 1 masked samples" in result.stdout
    out = _out_dir(path)
    assert (out / "nearfield.csv").is_file()
    assert (out / "nearfield_error.csv").is_file()
    report = json.loads((out / "nearfield_report.json").read_text(encoding="utf-8"))
    assert report["resolution"] == [5, 5]


@pytest.mark.parametrize(
    "args, message",
    [
        (["--bbox", "0,1,0"], "--bbox needs four numbers"),
        (["--bbox", "0,1,0,1,2"], "--bbox needs four numbers"),
        (["--bbox", "2,1,0,1"], "xmin < xmax"),
        (["--bbox", "0,1,0,1", "--resolution", "1"], "--resolution must be at least 2"),
    ],
)
def test_nearfield_rejects_bad_grid(scenario_file, circle_scenario_text, args, message):
    path = scenario_file(circle_scenario_text)
    _assert_invalid(CliRunner(), ["nearfield", "--config", str(path), *args], message)
