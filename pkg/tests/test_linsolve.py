"""Tests for the GMRES and LU solvers."""

from __future__ import annotations

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from smoothcfie.linsolve import SolveReport, gmres, solve_direct


@pytest.fixture()
def system(rng):
    """Well-conditioned complex system with a known solution."""
    size = 40
    matrix = 4.0 * np.eye(size) + (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / np.sqrt(size)
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return matrix, x, matrix @ x


# ---------------------------------------------------------------------------
# Test 1: Convergence
# ---------------------------------------------------------------------------


def test_identity_converges_in_one_iteration(rng):
    b = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    report = gmres(np.eye(12), b)
    assert report.converged
    assert report.iterations == 1
    assert_allclose(report.solution, b, atol=1e-14)


def test_matches_known_solution(system):
    matrix, x, b = system
    report = gmres(matrix, b, tol=1e-12)
    assert report.converged
    assert report.iterations < len(b)
    assert np.max(np.abs(report.solution - x)) / np.max(np.abs(x)) < 1e-10


def test_callable_operator(system):
    matrix, x, b = system
    report = gmres(lambda v: matrix @ v, b, tol=1e-12)
    assert_allclose(report.solution, x, rtol=0, atol=1e-9)


def test_direct_solver(system):
    matrix, x, b = system
    assert_allclose(solve_direct(matrix, b), x, atol=1e-12)


def test_gmres_agrees_with_lu(system):
    matrix, _, b = system
    report = gmres(matrix, b, tol=1e-12)
    assert_allclose(report.solution, solve_direct(matrix, b), atol=1e-9)


# ---------------------------------------------------------------------------
# Test 2: Residual history and stopping
# ---------------------------------------------------------------------------


def test_history_starts_at_one_and_decreases(system):
    matrix, _, b = system
    report = gmres(matrix, b, tol=1e-10)
    history = report.residual_history
    assert history[0] == 1.0
    assert len(history) == report.iterations + 1
    assert all(later <= earlier + 1e-12 for earlier, later in zip(history, history[1:]))
    assert report.relative_residual == history[-1]
    assert report.relative_residual < 1e-10


def test_history_tracks_true_residual(system):
    matrix, _, b = system
    report = gmres(matrix, b, tol=1e-4)
    true = np.linalg.norm(b - matrix @ report.solution) / np.linalg.norm(b)
    assert true == pytest.approx(report.relative_residual, rel=1e-6, abs=1e-12)


def test_non_convergence_is_reported(rng, caplog):
    size = 60
    matrix = np.diag(np.linspace(1.0, 100.0, size)).astype(complex)
    b = rng.standard_normal(size) + 0j
    with caplog.at_level(logging.WARNING, logger="smoothcfie.linsolve"):
        report = gmres(matrix, b, tol=1e-12, max_iter=3)
    assert not report.converged
    assert report.iterations == 3
    assert report.relative_residual > 1e-12
    assert "GMRES stopped after 3 iterations" in caplog.text


def test_zero_rhs():
    report = gmres(np.eye(5), np.zeros(5))
    assert report.converged
    assert report.iterations == 0
    assert report.residual_history == [0.0]
    assert np.all(report.solution == 0.0)


def test_exact_krylov_space_stops_early():
    """A matrix with two distinct eigenvalues needs at most two iterations."""
    matrix = np.diag([2.0] * 10 + [5.0] * 10).astype(complex)
    report = gmres(matrix, np.ones(20, dtype=complex), tol=1e-12)
    assert report.converged
    assert report.iterations <= 2
    assert_allclose(report.solution[:10], 0.5, atol=1e-12)
    assert_allclose(report.solution[10:], 0.2, atol=1e-12)


def test_empty_report_residual():
    assert SolveReport(np.zeros(0), 0, True).relative_residual == 0.0
