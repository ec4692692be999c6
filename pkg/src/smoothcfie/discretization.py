"""Nyström assembly of the smoothed and classic combined field integral equations.

Rows are collocated at the quadrature nodes of every obstacle.  The smoothed
equations subtract the density's local expansion through the plane-wave
smoothing functions; because that expansion needs phi'(t) (and phi''(t) on the
hypersingular diagonal), each row picks up full rows of the differentiation
matrices and the system stays a plain dense matrix.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from smoothcfie import kernels
from smoothcfie.geometry import (
    CurveJet,
    GradedMesh,
    ParametricCurve,
    nearest_point,
    reparametrize,
)
from smoothcfie.kernels import KernelSplit, free_kernels, split_block
from smoothcfie.quadrature import (
    DiffMatrix,
    DiscretizationError,
    Method,
    Quadrature,
    diff_matrices,
    kr_matrix,
    lagrange_rows,
    mk_matrix,
    trig_interpolation_rows,
)
from smoothcfie.smoothing import SmoothingAnchor, diag_second_derivs, p0_eval, p1_eval, rho_pair

logger = logging.getLogger(__name__)

ROW_BLOCK = 64


class Problem(str, Enum):
    """Boundary condition and formulation of the integral equation."""

    SD = "SD"
    SN = "SN"
    D = "D"
    N = "N"

    @property
    def dirichlet(self) -> bool:
        return self in (Problem.SD, Problem.D)

    @property
    def smoothed(self) -> bool:
        return self in (Problem.SD, Problem.SN)

    @classmethod
    def from_names(cls, bc: str, formulation: str) -> "Problem":
        table = {
            ("dirichlet", "smoothed"): cls.SD,
            ("neumann", "smoothed"): cls.SN,
            ("dirichlet", "classic"): cls.D,
            ("neumann", "classic"): cls.N,
        }
        try:
            return table[(bc, formulation)]
        except KeyError:
            raise DiscretizationError(
                f"unknown boundary condition/formulation pair {bc!r}/{formulation!r}"
            ) from None


@dataclass(frozen=True)
class BoundaryGrid:
    """One obstacle sampled at the quadrature nodes of its (possibly graded) parameter."""

    curve: ParametricCurve
    param: object
    quad: Quadrature
    mesh: GradedMesh
    jet: CurveJet
    d1: DiffMatrix
    d2: DiffMatrix

    @property
    def nodes(self) -> np.ndarray:
        return self.quad.nodes

    @property
    def size(self) -> int:
        return self.quad.size

    @property
    def h(self) -> float:
        return self.quad.h

    @property
    def speed(self) -> np.ndarray:
        return self.jet.speed

    @property
    def parameters(self) -> np.ndarray:
        """Curve parameter t = w(s) at each node."""
        return self.mesh.map(self.nodes)[0]

    def clamp(self, s) -> np.ndarray:
        """Keep off-node anchors inside the node range on graded meshes."""
        s = np.asarray(s, dtype=float)
        if self.mesh.identity:
            return s
        h = self.h
        clamped = np.clip(s, 0.5 * h, 2.0 * np.pi - 0.5 * h)
        moved = int(np.count_nonzero(clamped != s))
        if moved:
            logger.warning("clamped %d anchor(s) away from the corner of a %s", moved, self.curve.shape)
        return clamped

    def interpolation_rows(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Rows giving the density and its s-derivative at parameters *s*."""
        if self.mesh.identity:
            return trig_interpolation_rows(self.nodes, s)
        return lagrange_rows(self.nodes, s)


def discretize(curves: Sequence[ParametricCurve], quad: Quadrature, mesh: GradedMesh) -> tuple[BoundaryGrid, ...]:
    """Sample every curve on the quadrature nodes of *mesh*."""
    quad = replace(quad, shifted=not mesh.identity)
    d1, d2 = diff_matrices(quad, mesh)
    grids = []
    for curve in curves:
        if curve.has_corner and mesh.identity:
            raise DiscretizationError(
                f"shape {curve.shape!r} has a corner and needs a graded mesh (mesh_p >= 2)"
            )
        param = reparametrize(curve, mesh)
        grids.append(BoundaryGrid(curve, param, quad, mesh, param.jet(quad.nodes), d1, d2))
    return tuple(grids)


@dataclass(frozen=True)
class DiscreteSystem:
    """Dense Nyström system with its node metadata."""

    problem: Problem
    matrix: np.ndarray
    rhs: np.ndarray
    grids: tuple[BoundaryGrid, ...]
    k: float
    eta: float

    @property
    def slices(self) -> list[slice]:
        out, start = [], 0
        for grid in self.grids:
            out.append(slice(start, start + grid.size))
            start += grid.size
        return out

    def split(self, vector: np.ndarray) -> list[np.ndarray]:
        return [vector[sl] for sl in self.slices]


# ---------------------------------------------------------------------------
# Weighted kernels
# ---------------------------------------------------------------------------


class _Weights:
    """Per-rule weight data shared by all blocks of one assembly."""

    def __init__(self, quad: Quadrature):
        self.method = quad.method
        self.h = quad.h
        self.offsets = quad.offsets()
        self.mk = mk_matrix(quad.n) if quad.method is Method.MK else None
        self.kr = kr_matrix(quad.n, quad.method.kr_order) if quad.method.kr_order else None

    def apply(self, split: KernelSplit, rows: np.ndarray) -> np.ndarray:
        """Quadrature weights times kernel values for the given rows.

        The diagonal entry is the rule's own treatment of the singular node:
        the MK limit for MK and zero for KR and TR.
        """
        delta = self.offsets[rows]
        diag = delta == 0.0
        safe = np.where(diag, 1.0, delta)
        full = np.where(diag, 0.0, split.value(safe))
        h = self.h
        if self.method is Method.MK:
            log_sin = np.where(diag, 0.0, np.log(4.0 * np.sin(0.5 * safe) ** 2))
            weighted = h * full + (self.mk[rows] - h * log_sin) * (0.5 * split.log_coeff)
            weighted = np.where(diag, self.mk[rows] * 0.5 * split.log_coeff + h * split.smooth, weighted)
        elif self.kr is not None:
            weighted = h * (1.0 + self.kr[rows]) * full
        else:
            weighted = h * full
        return weighted


def _map_blocks(func: Callable[[np.ndarray], np.ndarray], size: int, threads: int) -> np.ndarray:
    blocks = [np.arange(a, min(a + ROW_BLOCK, size)) for a in range(0, size, ROW_BLOCK)]
    if threads <= 1 or len(blocks) == 1:
        return np.vstack([func(b) for b in blocks])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.vstack(list(pool.map(func, blocks)))


def _kernel_pair(problem: Problem, target: CurveJet, source: CurveJet, delta, k: float):
    """(A, B) of the integrand A*rho_D + B*rho_S."""
    if problem.dirichlet:
        a = split_block("L", target, source, delta, k)
        b = split_block("M", target, source, delta, k)
    else:
        a = split_block("H", target, source, delta, k)
        b = split_block("W", target, source, delta, k)
    negated = KernelSplit(-b.smooth, -b.log_coeff, -b.inv_sq_coeff)
    return a, negated


# ---------------------------------------------------------------------------
# Self-interaction blocks
# ---------------------------------------------------------------------------


def _smoothed_self_rows(grid: BoundaryGrid, problem: Problem, weights: _Weights, k: float, eta: float, rows: np.ndarray) -> np.ndarray:
    target = grid.jet.take(rows).expand(-1)
    source = grid.jet.expand(0)
    delta = weights.offsets[rows]
    diag = delta == 0.0
    a, b = _kernel_pair(problem, target, source, delta, k)
    a_w = np.where(diag, 0.0, weights.apply(a, rows))
    b_w = np.where(diag, 0.0, weights.apply(b, rows))

    anchor = SmoothingAnchor.from_jet(target, grid.nodes[rows][:, None], k, eta)
    p0, q0 = p0_eval(anchor, source.point, source.normal)
    p1, q1 = p1_eval(anchor, source.point, source.normal)

    speed = grid.speed[rows]
    local = np.arange(len(rows))
    out = a_w + 1j * eta * b_w
    out[local, rows] -= np.sum(a_w * p0 + b_w * q0, axis=1)
    slope = np.sum(a_w * p1 + b_w * q1, axis=1) / speed
    d1 = grid.d1.matrix_s[rows]
    out -= slope[:, None] * d1

    if not problem.dirichlet and weights.kr is None:
        # limit of H*rho_D on the diagonal: (H0/2) d2/dtau2 rho_D
        coeff = 0.5 * weights.h * a.inv_sq_coeff[local, rows]
        flat = SmoothingAnchor.from_jet(grid.jet.take(rows), grid.nodes[rows], k, eta)
        p0_dd, p1_dd = diag_second_derivs(flat, grid.param)
        out += coeff[:, None] * (grid.d2.matrix_s[rows] - (p1_dd / speed)[:, None] * d1)
        out[local, rows] -= coeff * p0_dd
    return out


def _pair_jets(grid: BoundaryGrid, rows: np.ndarray, weights: _Weights):
    target = grid.jet.take(rows).expand(-1)
    source = grid.jet.expand(0)
    return target, source, weights.offsets[rows]


def _classic_dirichlet_rows(grid: BoundaryGrid, weights: _Weights, k: float, eta: float, rows: np.ndarray) -> np.ndarray:
    target, source, delta = _pair_jets(grid, rows, weights)
    l_split = split_block("L", target, source, delta, k)
    m_split = split_block("M", target, source, delta, k)
    out = weights.apply(l_split.combine(m_split, -1j * eta), rows)
    out[np.arange(len(rows)), rows] += 0.5
    return out


def _maue_parts(grid: BoundaryGrid, weights: _Weights, k: float, eta: float, rows: np.ndarray) -> np.ndarray:
    """Rows of the normal term k^2 n.n S - i eta K' + (i eta/2) I, and of the tangential S."""
    target, source, delta = _pair_jets(grid, rows, weights)
    m_split = split_block("M", target, source, delta, k)
    w_split = split_block("W", target, source, delta, k)
    nn = np.sum(target.normal * source.normal, axis=-1)
    scale = k**2 * nn
    normal = KernelSplit(scale * m_split.smooth, scale * m_split.log_coeff, m_split.inv_sq_coeff)
    local = weights.apply(normal.combine(w_split, -1j * eta), rows)
    local[np.arange(len(rows)), rows] += 0.5j * eta
    speed = source.speed
    tangential = KernelSplit(m_split.smooth / speed, m_split.log_coeff / speed, m_split.inv_sq_coeff)
    return np.hstack((local, weights.apply(tangential, rows)))


def _self_block(grid: BoundaryGrid, problem: Problem, weights: _Weights, k: float, eta: float, threads: int) -> np.ndarray:
    size = grid.size
    if problem.smoothed:
        return _map_blocks(
            lambda rows: _smoothed_self_rows(grid, problem, weights, k, eta, rows), size, threads
        )
    if problem is Problem.D:
        return _map_blocks(
            lambda rows: _classic_dirichlet_rows(grid, weights, k, eta, rows), size, threads
        )
    both = _map_blocks(lambda rows: _maue_parts(grid, weights, k, eta, rows), size, threads)
    local, tangential = both[:, :size], both[:, size:]
    d1 = grid.d1.matrix_s
    return local + (d1 @ tangential @ d1) / grid.speed[:, None]


# ---------------------------------------------------------------------------
# Cross-obstacle blocks
# ---------------------------------------------------------------------------


def anchor_rows(source: BoundaryGrid, points: np.ndarray, k: float, eta: float):
    """Anchors at the nearest points of *source* and the interpolation rows there.

    Returns the anchor (batched over points, broadcasting against the source
    nodes), the value and s-derivative interpolation rows, and the anchor speed.
    """
    s_bar = source.clamp(nearest_point(source.param, points))
    jet = source.param.jet(s_bar)
    anchor = SmoothingAnchor.from_jet(jet.expand(-1), s_bar[:, None], k, eta)
    value_rows, deriv_rows = source.interpolation_rows(s_bar)
    return anchor, value_rows, deriv_rows, jet.speed


def smoothing_correction(source: BoundaryGrid, points: np.ndarray, a: np.ndarray, b: np.ndarray, k: float, eta: float) -> np.ndarray:
    """Rows to subtract from ``h*(a + i*eta*b)`` so the sum integrates a*rho_D + b*rho_S.

    *a* and *b* are the kernel values from *source* nodes to *points*; each
    point is anchored at its own nearest point on *source*.
    """
    src = source.jet.expand(0)
    anchor, value_rows, deriv_rows, speed = anchor_rows(source, points, k, eta)
    p0, q0 = p0_eval(anchor, src.point, src.normal)
    p1, q1 = p1_eval(anchor, src.point, src.normal)
    h = source.h
    s0 = h * np.sum(a * p0 + b * q0, axis=1)
    s1 = h * np.sum(a * p1 + b * q1, axis=1) / speed
    return s0[:, None] * value_rows + s1[:, None] * deriv_rows


def _cross_rows(target: BoundaryGrid, source: BoundaryGrid, problem: Problem, k: float, eta: float, rows: np.ndarray) -> np.ndarray:
    points = target.jet.point[rows]
    normals = target.jet.normal[rows]
    fk = free_kernels(points[:, None, :], source.jet.expand(0), k, normals[:, None, :])
    if problem.dirichlet:
        a, b = fk.double, -fk.single
    else:
        a, b = fk.hyper, -fk.adjoint
    out = source.h * (a + 1j * eta * b)
    if problem.smoothed:
        out -= smoothing_correction(source, points, a, b, k, eta)
    return out


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def assemble(
    problem: Problem,
    curves: Sequence[ParametricCurve],
    quad: Quadrature,
    mesh: GradedMesh,
    k: float,
    eta: float,
    incident,
    threads: int = 1,
) -> DiscreteSystem:
    """Assemble the dense Nyström system and right-hand side for *problem*."""
    if not k > 0.0 or not eta > 0.0:
        raise DiscretizationError(f"k and eta must be positive, got k={k}, eta={eta}")
    if not curves:
        raise DiscretizationError("at least one obstacle is required")
    if quad.method is Method.TR and not problem.smoothed:
        raise DiscretizationError("the trapezoidal rule only applies to the smoothed formulations")

    started = time.perf_counter()
    grids = discretize(curves, quad, mesh)
    weights = _Weights(grids[0].quad)
    total = sum(g.size for g in grids)
    matrix = np.zeros((total, total), dtype=complex)
    starts = np.cumsum([0] + [g.size for g in grids])

    for a, target in enumerate(grids):
        rs = slice(starts[a], starts[a + 1])
        for b, source in enumerate(grids):
            cs = slice(starts[b], starts[b + 1])
            if a == b:
                matrix[rs, cs] = _self_block(target, problem, weights, k, eta, threads)
            else:
                matrix[rs, cs] = _map_blocks(
                    lambda rows: _cross_rows(target, source, problem, k, eta, rows),
                    target.size,
                    threads,
                )
            logger.debug("block (%d, %d) assembled", a, b)

    rhs = np.concatenate([_boundary_data(problem, g, incident) for g in grids])
    logger.info(
        "assembled %s system: %d unknowns, %s n=%d, mesh_p=%d, %.2fs",
        problem.value,
        total,
        quad.method.value,
        quad.n,
        mesh.p,
        time.perf_counter() - started,
    )
    return DiscreteSystem(problem, matrix, rhs, grids, float(k), float(eta))


def _boundary_data(problem: Problem, grid: BoundaryGrid, incident) -> np.ndarray:
    if problem.dirichlet:
        return -incident.value(grid.jet.point)
    return -incident.normal_derivative(grid.jet.point, grid.jet.normal)


# ---------------------------------------------------------------------------
# Integrand sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrandSample:
    """Smoothed integrand A*rho_D + B*rho_S on a (t, tau) grid."""

    delta: np.ndarray
    log_coeff: np.ndarray
    full: np.ndarray
    diag_value: np.ndarray

    def mk_split(self):
        return kernels.mk_split(self.log_coeff, self.full, self.delta, self.diag_value)


def integrand_grid(
    problem: Problem,
    curve,
    t,
    tau,
    k: float,
    eta: float,
    phi: Callable,
    dphi: Callable,
    d2phi: Callable,
) -> IntegrandSample:
    """Sample the smoothed integrand of a density given by callables.

    The density and its first two parametric derivatives are evaluated from
    *phi*, *dphi* and *d2phi*; ``diag_value`` is the integrand's limit at
    tau = t for every t.
    """
    if not problem.smoothed:
        raise DiscretizationError("integrand sampling applies to the smoothed formulations")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    tt, ss = np.meshgrid(t, tau, indexing="ij")
    delta = kernels.wrap(tt - ss)
    if problem.dirichlet:
        a = kernels.kernel_l(curve, tt, ss, k)
        b = kernels.kernel_m(curve, tt, ss, k)
    else:
        a = kernels.kernel_h(curve, tt, ss, k)
        b = kernels.kernel_w(curve, tt, ss, k)
    target = curve.jet(t).expand(-1)
    source = curve.jet(tau).expand(0)
    anchor = SmoothingAnchor.from_jet(target, t[:, None], k, eta)
    rho_d, rho_s = rho_pair(
        phi(tau)[None, :],
        phi(t)[:, None],
        dphi(t)[:, None],
        anchor,
        source.point,
        source.normal,
        target.speed,
    )
    diag = delta == 0.0
    safe = np.where(diag, 1.0, delta)
    full = np.where(diag, 0.0, a.value(safe) * rho_d - b.value(safe) * rho_s)
    log_coeff = a.log_coeff * rho_d - b.log_coeff * rho_s
    if problem.dirichlet:
        diag_value = np.zeros(len(t), dtype=complex)
    else:
        flat = SmoothingAnchor.from_jet(curve.jet(t), t, k, eta)
        p0_dd, p1_dd = diag_second_derivs(flat, curve)
        h0 = kernels.kernel_h(curve, t, t, k).inv_sq_coeff
        speed = curve.jet(t).speed
        diag_value = 0.5 * h0 * (d2phi(t) - phi(t) * p0_dd - dphi(t) * p1_dd / speed)
    return IntegrandSample(delta, log_coeff, full, np.broadcast_to(diag_value[:, None], delta.shape))
