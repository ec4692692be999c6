"""Incident fields, far-field patterns, combined potentials and near-field grids.

The scattered field is represented as ``u = (D - i*eta*S)[phi]``.  Off the
boundary it is evaluated either with the plain quadrature of the layer
potentials or in smoothed form, where each obstacle's density is replaced by
its smoothing residual about the nearest boundary point, which keeps the
quadrature accurate arbitrarily close to the boundary.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from smoothcfie import SmoothCfieError
from smoothcfie.discretization import BoundaryGrid, DiscreteSystem, discretize, smoothing_correction
from smoothcfie.geometry import GradedMesh, ParametricCurve, distance_to_curve, is_inside
from smoothcfie.kernels import free_kernels
from smoothcfie.quadrature import Quadrature

logger = logging.getLogger(__name__)

DEFAULT_DIRECTIONS = 360
ON_BOUNDARY = 1e-12
_POINT_CHUNK = 512
_MASKED = 0j


class FieldError(SmoothCfieError):
    """Raised for evaluation points inside an obstacle or on its boundary, or mismatched far fields."""


# ---------------------------------------------------------------------------
# Incident fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncidentField:
    """A plane wave exp(i k d.x) or a sum of point sources sign * sum H0(k|x - x_s|)."""

    kind: str
    k: float
    angle_deg: float = 0.0
    sources: tuple[tuple[float, float], ...] = ()
    sign: float = -1.0

    def __post_init__(self) -> None:
        if self.kind not in ("plane_wave", "point_source"):
            raise FieldError(f"unknown incident field kind {self.kind!r}")
        if not self.k > 0.0:
            raise FieldError(f"wavenumber must be positive, got {self.k}")
        if self.kind == "point_source" and not self.sources:
            raise FieldError("point-source incidence needs at least one source location")

    @classmethod
    def plane_wave(cls, k: float, angle_deg: float = 0.0) -> "IncidentField":
        return cls("plane_wave", float(k), float(angle_deg))

    @classmethod
    def point_sources(cls, k: float, sources, sign: float = -1.0) -> "IncidentField":
        return cls("point_source", float(k), sources=tuple(tuple(map(float, s)) for s in sources), sign=float(sign))

    @property
    def direction(self) -> np.ndarray:
        angle = np.deg2rad(self.angle_deg)
        return np.array([np.cos(angle), np.sin(angle)])

    def shifted_sources(self, shift) -> "IncidentField":
        """Copy with each source moved by ``shift(x, y) -> (dx, dy)``."""
        moved = []
        for x, y in self.sources:
            dx, dy = shift(x, y)
            moved.append((x + dx, y + dy))
        return IncidentField(self.kind, self.k, self.angle_deg, tuple(moved), self.sign)

    def value(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == "plane_wave":
            return np.exp(1j * self.k * (points @ self.direction))
        total = np.zeros(points.shape[:-1], dtype=complex)
        for src in self.sources:
            rho = np.linalg.norm(points - np.asarray(src), axis=-1)
            total += special.hankel1(0, self.k * rho)
        return self.sign * total

    def gradient(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == "plane_wave":
            return (1j * self.k * self.value(points))[..., None] * self.direction
        total = np.zeros(points.shape, dtype=complex)
        for src in self.sources:
            diff = points - np.asarray(src)
            rho = np.linalg.norm(diff, axis=-1)
            total += (-self.k * special.hankel1(1, self.k * rho) / rho)[..., None] * diff
        return self.sign * total

    def normal_derivative(self, points, normals) -> np.ndarray:
        return np.sum(self.gradient(points) * np.asarray(normals), axis=-1)

    def exact_scattered(self, points) -> np.ndarray:
        """Scattered field -u_inc, exact when every source lies inside an obstacle."""
        return -self.value(points)

    def exact_far_field(self, directions) -> np.ndarray:
        if self.kind != "point_source":
            raise FieldError("an exact far field is only available for point-source incidence")
        directions = np.asarray(directions, dtype=float)
        phases = sum(np.exp(-1j * self.k * (directions @ np.asarray(src))) for src in self.sources)
        return -self.sign * np.sqrt(2.0 / (np.pi * self.k)) * np.exp(-0.25j * np.pi) * phases


# ---------------------------------------------------------------------------
# Far field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FarField:
    angles: np.ndarray
    directions: np.ndarray
    values: np.ndarray

    @property
    def angles_deg(self) -> np.ndarray:
        return np.rad2deg(self.angles)


def directions(n_dirs: int = DEFAULT_DIRECTIONS) -> tuple[np.ndarray, np.ndarray]:
    angles = np.arange(n_dirs) * (2.0 * np.pi / n_dirs)
    return angles, np.stack((np.cos(angles), np.sin(angles)), axis=-1)


def grid_far_field(grids: Sequence[BoundaryGrid], density: np.ndarray, k: float, eta: float, n_dirs: int = DEFAULT_DIRECTIONS) -> FarField:
    """Far-field pattern of (D - i*eta*S)[density] by the trapezoidal rule in s."""
    angles, dirs = directions(n_dirs)
    values = np.zeros(n_dirs, dtype=complex)
    start = 0
    for grid in grids:
        phi = density[start : start + grid.size]
        start += grid.size
        jet = grid.jet
        weight = (k * (dirs @ jet.normal.T) + eta) * np.exp(-1j * k * (dirs @ jet.point.T))
        values += grid.h * weight @ (phi * jet.speed)
    values *= np.exp(-0.25j * np.pi) / np.sqrt(8.0 * np.pi * k)
    return FarField(angles, dirs, values)


def far_field(density, curves: Sequence[ParametricCurve], quad: Quadrature, mesh: GradedMesh, k: float, eta: float, n_dirs: int = DEFAULT_DIRECTIONS) -> FarField:
    return grid_far_field(discretize(curves, quad, mesh), np.asarray(density, dtype=complex), k, eta, n_dirs)


def farfield_error(candidate: FarField, reference: FarField) -> float:
    """Maximum relative far-field error over directions where the reference is not negligible."""
    if candidate.directions.shape != reference.directions.shape or not np.allclose(
        candidate.directions, reference.directions, atol=1e-12
    ):
        raise FieldError("far fields were sampled on different direction sets")
    magnitude = np.abs(reference.values)
    keep = magnitude >= 1e-14 * magnitude.max() if magnitude.max() > 0.0 else np.zeros_like(magnitude, dtype=bool)
    if not np.any(keep):
        return float(np.max(np.abs(candidate.values - reference.values)))
    return float(np.max(np.abs(candidate.values - reference.values)[keep] / magnitude[keep]))


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scene:
    """A solved density together with the discretized boundaries it lives on."""

    grids: tuple[BoundaryGrid, ...]
    density: np.ndarray
    k: float
    eta: float
    incident: IncidentField | None = None

    @classmethod
    def from_system(cls, system: DiscreteSystem, density: np.ndarray, incident: IncidentField | None = None) -> "Scene":
        return cls(system.grids, np.asarray(density, dtype=complex), system.k, system.eta, incident)

    def parts(self) -> list[np.ndarray]:
        out, start = [], 0
        for grid in self.grids:
            out.append(self.density[start : start + grid.size])
            start += grid.size
        return out

    def outside(self, points) -> np.ndarray:
        """True where a point is exterior to every obstacle and off every boundary."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(len(points), dtype=bool)
        for grid in self.grids:
            ok &= ~is_inside(grid.curve, points)
            candidates = np.flatnonzero(ok)
            if len(candidates):
                near = distance_to_curve(grid.param, points[candidates]) <= ON_BOUNDARY
                ok[candidates[near]] = False
        return ok

    def far_field(self, n_dirs: int = DEFAULT_DIRECTIONS) -> FarField:
        return grid_far_field(self.grids, self.density, self.k, self.eta, n_dirs)

    def evaluate(self, points, smoothed: bool = False) -> np.ndarray:
        """Scattered field at exterior *points*; no inside test is made here."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(points), dtype=complex)
        for start in range(0, len(points), _POINT_CHUNK):
            chunk = points[start : start + _POINT_CHUNK]
            out[start : start + len(chunk)] = self._evaluate_chunk(chunk, smoothed)
        return out

    def _evaluate_chunk(self, points: np.ndarray, smoothed: bool) -> np.ndarray:
        total = np.zeros(len(points), dtype=complex)
        for grid, phi in zip(self.grids, self.parts()):
            fk = free_kernels(points[:, None, :], grid.jet.expand(0), self.k)
            a, b = fk.double, -fk.single
            rows = grid.h * (a + 1j * self.eta * b)
            if smoothed:
                rows = rows - smoothing_correction(grid, points, a, b, self.k, self.eta)
            total += rows @ phi
        return total


def potential(
    density,
    curves: Sequence[ParametricCurve],
    quad: Quadrature,
    mesh: GradedMesh,
    k: float,
    eta: float,
    r,
    smoothed: bool = False,
):
    """Combined potential at *r* (a 2-vector or an (m, 2) array of exterior points)."""
    scene = Scene(discretize(curves, quad, mesh), np.asarray(density, dtype=complex), float(k), float(eta))
    return scene_potential(scene, r, smoothed)


def scene_potential(scene: Scene, r, smoothed: bool = False):
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    points = np.atleast_2d(r)
    bad = ~scene.outside(points)
    if np.any(bad):
        first = points[np.flatnonzero(bad)[0]]
        raise FieldError(
            f"potential requested at ({first[0]:.6g}, {first[1]:.6g}), which is not exterior to the obstacles"
        )
    values = scene.evaluate(points, smoothed)
    return complex(values[0]) if single else values


# ---------------------------------------------------------------------------
# Near-field grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldGrid:
    """Field samples on a rectangular grid; ``values[iy, ix]`` at ``(x[ix], y[iy])``.

    Masked samples (inside an obstacle or on its boundary) hold 0j.
    """

    bbox: tuple[float, float, float, float]
    resolution: tuple[int, int]
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def points(self) -> np.ndarray:
        xx, yy = np.meshgrid(self.x, self.y)
        return np.stack((xx, yy), axis=-1)

    def log10_error(self, exact: np.ndarray) -> np.ndarray:
        """log10 |values - exact| on exterior samples; masked samples hold -inf."""
        err = np.abs(self.values - exact)
        with np.errstate(divide="ignore"):
            out = np.log10(err)
        return np.where(self.mask, -np.inf, out)


def near_grid(
    scene: Scene,
    bbox,
    resolution,
    smoothed: bool = False,
    total: bool = False,
    threads: int = 1,
) -> FieldGrid:
    """Scattered (or total) field on a grid over *bbox* = (xmin, xmax, ymin, ymax)."""
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else tuple(resolution)
    if nx < 2 or ny < 2:
        raise FieldError(f"grid resolution must be at least 2 per dimension, got {nx}x{ny}")
    xmin, xmax, ymin, ymax = map(float, bbox)
    if not (xmax > xmin and ymax > ymin):
        raise FieldError(f"empty bounding box {bbox!r}")
    if total and scene.incident is None:
        raise FieldError("total field requested but the scene has no incident field")

    x = np.linspace(xmin, xmax, int(nx))
    y = np.linspace(ymin, ymax, int(ny))
    xx, yy = np.meshgrid(x, y)
    points = np.stack((xx.ravel(), yy.ravel()), axis=-1)
    exterior = scene.outside(points)
    targets = points[exterior]

    chunks = [targets[i : i + _POINT_CHUNK] for i in range(0, len(targets), _POINT_CHUNK)]

    def evaluate(chunk: np.ndarray) -> np.ndarray:
        return scene.evaluate(chunk, smoothed)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pieces = list(pool.map(evaluate, chunks))
    else:
        pieces = [evaluate(c) for c in chunks]

    values = np.full(len(points), _MASKED, dtype=complex)
    if pieces:
        values[exterior] = np.concatenate(pieces)
        if total:
            values[exterior] += scene.incident.value(targets)
    logger.info(
        "near field: %dx%d grid, %d exterior samples, %s",
        nx,
        ny,
        len(targets),
        "smoothed" if smoothed else "plain",
    )
    shape = (len(y), len(x))
    return FieldGrid(
        (xmin, xmax, ymin, ymax),
        (int(nx), int(ny)),
        x,
        y,
        values.reshape(shape),
        (~exterior).reshape(shape),
    )
