"""Tests for incident fields, far fields, potentials and near-field grids."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from smoothcfie.discretization import Problem, assemble
from smoothcfie.fields import (
    FarField,
    FieldError,
    IncidentField,
    Scene,
    directions,
    far_field,
    farfield_error,
    near_grid,
    potential,
    scene_potential,
)
from smoothcfie.geometry import GradedMesh, ParametricCurve
from smoothcfie.linsolve import solve_direct
from smoothcfie.quadrature import Method, Quadrature

K = 2.0
SOURCE = (0.1, 0.2)


def _scene(curves, problem=Problem.SD, method=Method.MK, n=32, mesh=GradedMesh(), incident=None) -> Scene:
    incident = incident or IncidentField.point_sources(K, [SOURCE])
    system = assemble(problem, curves, Quadrature(method, n), mesh, K, K, incident)
    return Scene.from_system(system, solve_direct(system.matrix, system.rhs), incident)


@pytest.fixture()
def kite_scene(kite) -> Scene:
    return _scene([kite])


# ---------------------------------------------------------------------------
# Test 1: Incident fields
# ---------------------------------------------------------------------------


def test_plane_wave():
    wave = IncidentField.plane_wave(K, 90.0)
    assert_allclose(wave.direction, [0.0, 1.0], atol=1e-15)
    points = np.array([[0.0, 0.0], [0.0, 0.25]])
    assert_allclose(wave.value(points), [1.0, np.exp(0.5j)])
    assert_allclose(wave.gradient(points)[1], [0.0, 2j * np.exp(0.5j)], atol=1e-15)


def test_point_source_gradient_matches_finite_differences():
    field = IncidentField.point_sources(K, [(0.0, 0.0), (0.3, -0.1)], sign=1.0)
    x = np.array([[1.2, 0.7]])
    eps = 1e-6
    fd = [
        (field.value(x + eps * e) - field.value(x - eps * e))[0] / (2 * eps)
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    ]
    assert_allclose(field.gradient(x)[0], fd, atol=1e-7)
    normal = np.array([[0.6, 0.8]])
    assert field.normal_derivative(x, normal)[0] == pytest.approx(0.6 * fd[0] + 0.8 * fd[1], abs=1e-7)


def test_point_source_default_sign():
    field = IncidentField.point_sources(K, [(0.0, 0.0)])
    assert field.sign == -1.0
    assert field.value(np.array([[1.0, 0.0]]))[0].real < 0.0
    assert_allclose(field.exact_scattered(np.array([[1.0, 0.0]])), -field.value(np.array([[1.0, 0.0]])))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "spherical", "k": 1.0},
        {"kind": "plane_wave", "k": 0.0},
        {"kind": "point_source", "k": 1.0},
    ],
)
def test_incident_field_rejects_bad_input(kwargs):
    with pytest.raises(FieldError):
        IncidentField(**kwargs)


def test_shifted_sources():
    field = IncidentField.point_sources(K, [(-1.0, 0.0), (1.0, 0.5)])
    moved = field.shifted_sources(lambda x, y: (-0.1 if x < 0 else 0.1, 0.0))
    assert moved.sources == ((-1.1, 0.0), (1.1, 0.5))
    assert moved.sign == field.sign


def test_exact_far_field_needs_point_sources():
    with pytest.raises(FieldError):
        IncidentField.plane_wave(K).exact_far_field(directions(8)[1])


def test_exact_far_field_of_centred_source_has_constant_modulus():
    field = IncidentField.point_sources(K, [(0.0, 0.0)])
    values = field.exact_far_field(directions(16)[1])
    assert_allclose(np.abs(values), np.sqrt(2.0 / (np.pi * K)), rtol=1e-14)


# ---------------------------------------------------------------------------
# Test 2: Far fields
# ---------------------------------------------------------------------------


def test_directions():
    angles, dirs = directions(4)
    assert_allclose(angles, [0.0, np.pi / 2, np.pi, 1.5 * np.pi])
    assert_allclose(dirs[1], [0.0, 1.0], atol=1e-15)


def test_zero_density_has_zero_far_field(kite):
    quad = Quadrature(Method.MK, 8)
    result = far_field(np.zeros(16), [kite], quad, GradedMesh(), K, K, n_dirs=12)
    assert result.values.shape == (12,)
    assert np.all(result.values == 0.0)
    assert_allclose(result.angles_deg[:2], [0.0, 30.0])


@pytest.mark.parametrize(
    "problem, method, n, tol",
    [
        (Problem.SD, Method.MK, 32, 1e-5),
        (Problem.SN, Method.MK, 32, 1e-4),
        (Problem.D, Method.MK, 32, 1e-6),
        (Problem.N, Method.MK, 32, 1e-6),
        (Problem.SD, Method.KR6, 48, 1e-4),
        (Problem.SD, Method.TR, 64, 1e-2),
    ],
)
def test_kite_far_field_matches_exact_solution(kite, problem, method, n, tol):
    scene = _scene([kite], problem, method, n)
    computed = scene.far_field(72)
    exact = FarField(computed.angles, computed.directions, scene.incident.exact_far_field(computed.directions))
    assert farfield_error(computed, exact) < tol


def test_graded_mesh_on_corner_shape():
    drop = ParametricCurve("drop")
    scene = _scene([drop], Problem.SD, Method.MK, 48, GradedMesh(4), IncidentField.point_sources(K, [(0.8, 0.0)]))
    computed = scene.far_field(36)
    exact = FarField(computed.angles, computed.directions, scene.incident.exact_far_field(computed.directions))
    assert farfield_error(computed, exact) < 1e-2


def test_farfield_error():
    angles, dirs = directions(8)
    reference = FarField(angles, dirs, np.full(8, 2.0 + 0j))
    assert farfield_error(reference, reference) == 0.0
    assert farfield_error(FarField(angles, dirs, np.zeros(8, complex)), reference) == 1.0
    assert farfield_error(FarField(angles, dirs, np.full(8, 2.2 + 0j)), reference) == pytest.approx(0.1)


def test_farfield_error_is_relative_per_direction():
    """A small absolute miss where the reference is weak dominates the error."""
    angles, dirs = directions(4)
    reference = FarField(angles, dirs, np.array([10.0, 0.1, 10.0, 10.0], dtype=complex))
    candidate = FarField(angles, dirs, np.array([10.0, 0.15, 10.0, 10.0], dtype=complex))
    assert farfield_error(candidate, reference) == pytest.approx(0.5)


def test_farfield_error_rejects_different_directions():
    a = FarField(*directions(8), np.ones(8, complex))
    b = FarField(*directions(9), np.ones(9, complex))
    with pytest.raises(FieldError):
        farfield_error(a, b)


# ---------------------------------------------------------------------------
# Test 3: Potentials
# ---------------------------------------------------------------------------


def test_potential_far_from_boundary(kite_scene):
    points = np.array([[3.0, 0.0], [0.0, 3.0], [-3.0, -1.0]])
    exact = kite_scene.incident.exact_scattered(points)
    assert_allclose(scene_potential(kite_scene, points), exact, rtol=1e-6)


def test_potential_returns_scalar_for_single_point(kite_scene):
    value = scene_potential(kite_scene, np.array([3.0, 0.0]))
    assert isinstance(value, complex)


def test_potential_wrapper_matches_scene(kite, kite_scene):
    point = np.array([0.0, 2.5])
    direct = potential(kite_scene.density, [kite], Quadrature(Method.MK, 32), GradedMesh(), K, K, point)
    assert direct == pytest.approx(scene_potential(kite_scene, point), abs=1e-14)


def test_smoothed_potential_close_to_boundary(kite, kite_scene):
    jet = kite.jet(np.array([1.0, 2.5, 4.0]))
    points = jet.point + 1e-3 * jet.normal
    exact = kite_scene.incident.exact_scattered(points)
    smoothed = scene_potential(kite_scene, points, smoothed=True)
    plain = scene_potential(kite_scene, points, smoothed=False)
    smoothed_err = np.max(np.abs(smoothed - exact)) / np.max(np.abs(exact))
    plain_err = np.max(np.abs(plain - exact)) / np.max(np.abs(exact))
    assert smoothed_err < 5e-2
    assert smoothed_err < plain_err


def test_potential_rejects_interior_points(kite_scene):
    with pytest.raises(FieldError, match="not exterior"):
        scene_potential(kite_scene, np.array([0.0, 0.0]))


def test_potential_rejects_boundary_points(kite, kite_scene):
    with pytest.raises(FieldError):
        scene_potential(kite_scene, kite.point(0.7))


# ---------------------------------------------------------------------------
# Test 4: Near-field grids
# ---------------------------------------------------------------------------


def test_near_grid_masks_interior(kite_scene):
    grid = near_grid(kite_scene, (-3.0, 3.0, -3.0, 3.0), 13)
    assert grid.values.shape == (13, 13)
    centre = (6, 6)
    assert grid.mask[centre]
    assert grid.values[centre] == 0j
    assert not grid.mask[0, 0]
    exact = kite_scene.incident.exact_scattered(grid.points()[0, 0])
    assert grid.values[0, 0] == pytest.approx(complex(exact), rel=1e-6)


def test_near_grid_total_field_adds_incident(kite_scene):
    box = (2.0, 3.0, 2.0, 3.0)
    scattered = near_grid(kite_scene, box, 3)
    total = near_grid(kite_scene, box, 3, total=True)
    incident = kite_scene.incident.value(scattered.points())
    assert_allclose(total.values, scattered.values + incident, atol=1e-14)


def test_near_grid_threads_match_serial(kite_scene):
    box = (-3.0, 3.0, -3.0, 3.0)
    serial = near_grid(kite_scene, box, 30)
    pooled = near_grid(kite_scene, box, 30, threads=2)
    assert_allclose(pooled.values, serial.values, atol=0)


def test_log10_error_masks_interior(kite_scene):
    grid = near_grid(kite_scene, (-3.0, 3.0, -3.0, 3.0), 7)
    err = grid.log10_error(np.zeros_like(grid.values))
    assert np.all(np.isneginf(err[grid.mask]))
    assert np.all(np.isfinite(err[~grid.mask]))


@pytest.mark.parametrize(
    "bbox, resolution",
    [((0.0, 1.0, 0.0, 1.0), 1), ((1.0, 0.0, 0.0, 1.0), 5)],
)
def test_near_grid_rejects_bad_grids(kite_scene, bbox, resolution):
    with pytest.raises(FieldError):
        near_grid(kite_scene, bbox, resolution)


def test_total_field_needs_incident(kite_scene):
    bare = Scene(kite_scene.grids, kite_scene.density, K, K)
    with pytest.raises(FieldError):
        near_grid(bare, (2.0, 3.0, 2.0, 3.0), 3, total=True)
