"""Desk-scale accuracy checks on the benchmark obstacles.

Deselect with ``-m "not slow"``.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from smoothcfie.fields import farfield_error
from smoothcfie.kernels import free_kernels
from smoothcfie.quadrature import Method, Quadrature
from smoothcfie.scenarios import load_scenario, loglog_slope, solve
from smoothcfie.smoothing import SmoothingAnchor, p0_eval, p1_eval

from .conftest import EXAMPLES

pytestmark = pytest.mark.slow

K = 4.0


# ---------------------------------------------------------------------------
# Test 1: Exact solution recovered on the unit circle
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_circle_point_source_recovery(scenario_file, circle_scenario_text, bc):
    text = circle_scenario_text.replace("bc = dirichlet", f"bc = {bc}").replace("n = 24", "n = 64\ngmres_tol = 1e-12")
    scenario = load_scenario(scenario_file(text))
    outcome = solve(scenario, threads=1)
    assert outcome.report.converged
    assert outcome.exact_error() <= 1e-8


# ---------------------------------------------------------------------------
# Test 2: Convergence orders on the kite, k = eta = 4
# ---------------------------------------------------------------------------

_KITE = EXAMPLES / "kite_plane_wave.cfg"
_SWEEP = [20, 40, 80, 160]


def _kite_far_field(bc, method, n, **overrides):
    scenario = load_scenario(_KITE, {"bc": bc, "method": method, "n": n, "gmres_tol": 1e-12, **overrides})
    outcome = solve(scenario, threads=1)
    assert outcome.report.converged
    return outcome.far_field


@pytest.fixture(scope="module")
def kite_references():
    return {bc: _kite_far_field(bc, "MK", 256) for bc in ("dirichlet", "neumann")}


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
@pytest.mark.parametrize("method, low, high", [("TR", 2.5, 3.5), ("KR6", 5.0, 7.0)])
def test_algebraic_orders(kite_references, bc, method, low, high):
    errors = [farfield_error(_kite_far_field(bc, method, n), kite_references[bc]) for n in _SWEEP]
    h = [np.pi / n for n in _SWEEP]
    slope = loglog_slope(h, errors)
    assert low <= slope <= high, errors


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_kr10_reaches_high_order(kite_references, bc):
    errors = [farfield_error(_kite_far_field(bc, "KR10", n), kite_references[bc]) for n in _SWEEP]
    h = [np.pi / n for n in _SWEEP]
    assert loglog_slope(h, errors) >= 6.5, errors
    assert loglog_slope(h[-2:], errors[-2:]) >= 8.0, errors


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_mk_is_spectrally_accurate(kite_references, bc):
    error = farfield_error(_kite_far_field(bc, "MK", 128), kite_references[bc])
    assert error <= 1e-8


# ---------------------------------------------------------------------------
# Test 3: GMRES iteration counts across frequencies
# ---------------------------------------------------------------------------


def _iterations(bc, formulation, k, n):
    scenario = load_scenario(_KITE, {"bc": bc, "formulation": formulation, "k": k, "n": n})
    outcome = solve(scenario, threads=1)
    assert outcome.report.converged
    return outcome.report.iterations


# Ceilings sit a few iterations above the counts this discretization produces.
@pytest.mark.parametrize(
    "k, n, dirichlet_max, neumann_max",
    [(1.0, 15, 10, 22), (4.0, 60, 16, 40), (16.0, 240, 21, 50)],
)
def test_iteration_counts(k, n, dirichlet_max, neumann_max):
    smoothed_d = _iterations("dirichlet", "smoothed", k, n)
    classic_d = _iterations("dirichlet", "classic", k, n)
    smoothed_n = _iterations("neumann", "smoothed", k, n)
    assert smoothed_d <= dirichlet_max
    assert abs(smoothed_d - classic_d) <= 3
    assert smoothed_n <= neumann_max
    if k == 1.0:
        assert 6 <= smoothed_d <= 10


def test_kite_iterations_and_accuracy():
    scenario = load_scenario(_KITE)
    smoothed = solve(scenario, threads=1)
    reference = solve(replace(scenario, n=8 * scenario.n), threads=1)

    assert smoothed.report.converged
    assert farfield_error(smoothed.far_field, reference.far_field) < 1e-4


# ---------------------------------------------------------------------------
# Test 4: Green's identity for the smoothing functions on the kite
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("evaluate", [p0_eval, p1_eval], ids=["p0", "p1"])
def test_green_identity_for_smoothing_functions(kite, evaluate):
    """A Helmholtz solution inside the kite is invisible from outside it."""
    quad = Quadrature(Method.MK, 128)
    jet = kite.jet(quad.nodes)
    theta = np.linspace(0.0, 2.0 * np.pi, 20, endpoint=False)
    targets = 3.0 * np.stack((np.cos(theta), np.sin(theta)), axis=-1)
    fk = free_kernels(targets[:, None, :], jet, K)
    rng = np.random.default_rng(7)
    for t0 in rng.uniform(0.0, 2.0 * np.pi, 10):
        anchor = SmoothingAnchor.on_curve(kite, np.array([t0]), K, K)
        value, dn = evaluate(anchor, jet.point, jet.normal)
        residual = quad.h * (fk.double @ value - fk.single @ dn)
        assert np.abs(residual).max() <= 1e-8


# ---------------------------------------------------------------------------
# Test 5: Two nearly touching kites
# ---------------------------------------------------------------------------


def test_close_kites_neumann_smoothed_beats_classic():
    scenario = load_scenario(EXAMPLES / "two_kites.cfg", {"n": 32, "gmres_tol": 1e-10})
    smoothed = solve(scenario, threads=1)
    classic = solve(replace(scenario, formulation="classic"), threads=1)

    assert smoothed.report.converged
    assert smoothed.exact_error() < 0.1 * classic.exact_error()


# ---------------------------------------------------------------------------
# Test 6: Drop with a corner on a graded mesh
# ---------------------------------------------------------------------------


def test_drop_corner_converges():
    base = load_scenario(EXAMPLES / "drop_corner.cfg", {"gmres_tol": 1e-12})
    reference = solve(replace(base, n=512), threads=1).far_field
    errors = [farfield_error(solve(replace(base, n=n), threads=1).far_field, reference) for n in (32, 64, 128, 256)]
    assert all(fine < coarse for coarse, fine in zip(errors, errors[1:])), errors
    assert errors[-1] <= 1e-6
