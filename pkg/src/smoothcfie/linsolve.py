"""Dense solvers for the assembled systems: full GMRES and LU."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6

Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass
class SolveReport:
    """Outcome of an iterative solve.

    ``residual_history`` holds the relative residual estimate after every
    iteration, starting with 1.0 for the initial guess x = 0.
    """

    solution: np.ndarray
    iterations: int
    converged: bool
    residual_history: list[float] = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else 0.0


def _as_matvec(operator: Operator) -> Callable[[np.ndarray], np.ndarray]:
    if callable(operator):
        return operator
    matrix = np.asarray(operator)
    return lambda v: matrix @ v


def _givens(a: complex, b: complex) -> tuple[float, complex, complex]:
    """Rotation with c real, s complex, sending (a, b) to (r, 0)."""
    if b == 0:
        return 1.0, 0j, a
    if a == 0:
        return 0.0, 1.0 + 0j, b
    r = np.hypot(abs(a), abs(b))
    phase = a / abs(a)
    c = abs(a) / r
    s = phase * np.conj(b) / r
    return c, s, phase * r


def gmres(operator: Operator, rhs: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> SolveReport:
    """Unrestarted GMRES from x = 0.

    Arnoldi uses modified Gram-Schmidt with one reorthogonalization pass; the
    Hessenberg matrix is reduced with complex Givens rotations.  Stops when the
    relative residual drops below *tol*, at ``max_iter`` (default: the system
    size), or on breakdown.  Never raises on non-convergence: the report says so.
    """
    matvec = _as_matvec(operator)
    b = np.asarray(rhs, dtype=complex)
    size = b.shape[0]
    max_iter = size if max_iter is None else min(int(max_iter), size)
    beta = float(np.linalg.norm(b))
    if beta == 0.0:
        return SolveReport(np.zeros(size, dtype=complex), 0, True, [0.0])

    basis = np.zeros((max_iter + 1, size), dtype=complex)
    hess = np.zeros((max_iter + 1, max_iter), dtype=complex)
    cs = np.zeros(max_iter)
    sn = np.zeros(max_iter, dtype=complex)
    g = np.zeros(max_iter + 1, dtype=complex)
    g[0] = beta
    basis[0] = b / beta
    history = [1.0]
    converged = False
    steps = 0

    for j in range(max_iter):
        w = matvec(basis[j])
        for _ in range(2):
            for i in range(j + 1):
                coeff = np.vdot(basis[i], w)
                hess[i, j] += coeff
                w = w - coeff * basis[i]
        w_norm = float(np.linalg.norm(w))
        scale = float(np.abs(hess[: j + 1, j]).max())
        hess[j + 1, j] = w_norm

        for i in range(j):
            upper = hess[i, j]
            lower = hess[i + 1, j]
            hess[i, j] = cs[i] * upper + sn[i] * lower
            hess[i + 1, j] = -np.conj(sn[i]) * upper + cs[i] * lower
        cs[j], sn[j], hess[j, j] = _givens(hess[j, j], hess[j + 1, j])
        hess[j + 1, j] = 0.0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]

        steps = j + 1
        residual = abs(g[j + 1]) / beta
        history.append(float(residual))
        if residual < tol:
            converged = True
            break
        if w_norm <= 1e-14 * scale:
            logger.debug("GMRES breakdown at iteration %d", steps)
            converged = residual < tol
            break
        basis[j + 1] = w / w_norm

    y = linalg.solve_triangular(hess[:steps, :steps], g[:steps])
    solution = basis[:steps].T @ y
    if converged:
        logger.info("GMRES converged in %d iterations (residual %.3e)", steps, history[-1])
    else:
        logger.warning("GMRES stopped after %d iterations at residual %.3e", steps, history[-1])
    return SolveReport(solution, steps, converged, history)


def solve_direct(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """LU solve, used for reference solutions and small systems."""
    lu, piv = linalg.lu_factor(matrix)
    return linalg.lu_solve((lu, piv), rhs)
