"""Periodic quadrature rules and differentiation matrices on 2n equispaced nodes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import fft, linalg

from smoothcfie import SmoothCfieError
from smoothcfie.geometry import GeometryError, GradedMesh

# Spectral differentiation on a graded mesh needs w' to vanish to this order.
MIN_SPECTRAL_GRADING = 4

# Kapur-Rokhlin corrections for logarithmic singularities, gamma_1 ... gamma_m.
# Each set sums to 1/2.
_KR_TABLES = {
    6: (
        4.967362978287758,
        -16.20501504859126,
        25.85153761832639,
        -22.22599466791883,
        9.930104998037539,
        -1.817995878141594,
    ),
    10: (
        7.832432020568779,
        -45.65161670374749,
        145.2168846354677,
        -290.1348302886379,
        387.0862162579900,
        -352.3821383570681,
        217.2421547519342,
        -87.07796087382991,
        20.53584266072635,
        -2.166984103403823,
    ),
}


class DiscretizationError(SmoothCfieError):
    """Raised for unsupported or ill-posed discretization requests."""


class Method(str, Enum):
    TR = "TR"
    MK = "MK"
    KR6 = "KR6"
    KR10 = "KR10"

    @property
    def kr_order(self) -> int:
        return {Method.KR6: 6, Method.KR10: 10}.get(self, 0)


@dataclass(frozen=True)
class Quadrature:
    """2n-node periodic rule; shifted nodes s_j = (j + 1/2) pi/n avoid a corner at 0."""

    method: Method
    n: int
    shifted: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DiscretizationError(f"n must be positive, got {self.n}")
        order = self.method.kr_order
        if order and self.n <= order:
            raise DiscretizationError(
                f"{self.method.value} needs n > {order} for its correction stencil, got n={self.n}"
            )

    @property
    def size(self) -> int:
        return 2 * self.n

    @property
    def h(self) -> float:
        return np.pi / self.n

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.size, dtype=float)
        return (j + 0.5) * self.h if self.shifted else j * self.h

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, self.h)

    def offsets(self) -> np.ndarray:
        """Matrix of wrapped parameter differences t_i - t_j in (-pi, pi]."""
        idx = np.arange(self.size)
        diff = np.mod(idx[:, None] - idx[None, :] + self.n - 1, self.size) - (self.n - 1)
        return diff * self.h


def mk_weights(n: int) -> np.ndarray:
    """Martensen-Kussmaul weights R_j for log(4 sin^2((t - tau)/2)), j = 0 ... 2n-1."""
    if n < 1:
        raise DiscretizationError(f"n must be positive, got {n}")
    j = np.arange(2 * n)
    m = np.arange(1, n)
    cos_sum = np.cos(np.outer(j, m) * np.pi / n) @ (1.0 / m) if n > 1 else np.zeros(2 * n)
    return -(2.0 * np.pi / n) * cos_sum - (-1.0) ** j * np.pi / n**2


def mk_matrix(n: int) -> np.ndarray:
    """Circulant matrix with entries R_{|i-j|}."""
    return linalg.circulant(mk_weights(n))


def kr_weights(order: int) -> np.ndarray:
    """Correction table for the log-singular Kapur-Rokhlin rule.

    Entry 0 is the weight of the singular node itself, which is identically
    zero; entry l >= 1 is gamma_l.
    """
    try:
        table = _KR_TABLES[order]
    except KeyError:
        raise DiscretizationError(f"Kapur-Rokhlin order must be 6 or 10, got {order!r}") from None
    return np.concatenate(([0.0], table))


def kr_matrix(n: int, order: int) -> np.ndarray:
    """Circulant matrix of gamma_{d(i,j)} with d the periodic index distance."""
    gamma = kr_weights(order)
    m = len(gamma) - 1
    if n <= m:
        raise DiscretizationError(f"KR{order} needs n > {m}, got n={n}")
    col = np.zeros(2 * n)
    col[1 : m + 1] = gamma[1:]
    col[-m:] = gamma[1:][::-1]
    return linalg.circulant(col)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffMatrix:
    """Differentiation matrix of order ``derivative`` on the quadrature nodes.

    ``matrix`` returns derivatives with respect to the curve parameter t;
    ``matrix_s`` returns derivatives with respect to the quadrature variable s.
    The two coincide on uniform meshes.
    """

    scheme: str
    derivative: int
    graded: bool
    matrix: np.ndarray
    matrix_s: np.ndarray


def fft_diff(size: int, derivative: int) -> np.ndarray:
    """Spectral differentiation matrix on ``size`` equispaced periodic nodes.

    The Nyquist mode is dropped for odd derivatives and kept for even ones.
    """
    m = fft.fftfreq(size, d=1.0 / size)
    symbol = (1j * m) ** derivative
    if derivative % 2 and size % 2 == 0:
        symbol[size // 2] = 0.0
    return fft.ifft(symbol[:, None] * fft.fft(np.eye(size), axis=0), axis=0).real


def fd4_diff(size: int, h: float, derivative: int) -> np.ndarray:
    """Periodic centered fourth-order finite-difference matrix."""
    if size < 5:
        raise DiscretizationError(f"fourth-order differences need at least 5 nodes, got {size}")
    col = np.zeros(size)
    if derivative == 1:
        col[1], col[2] = -8.0, 1.0
        col[-1], col[-2] = 8.0, -1.0
        col /= 12.0 * h
    elif derivative == 2:
        col[0] = -30.0
        col[1], col[2] = 16.0, -1.0
        col[-1], col[-2] = 16.0, -1.0
        col /= 12.0 * h**2
    else:
        raise DiscretizationError(f"unsupported derivative order {derivative}")
    return linalg.circulant(col)


def diff_matrices(quad: Quadrature, mesh: GradedMesh) -> tuple[DiffMatrix, DiffMatrix]:
    """First and second derivative matrices for densities sampled on *quad*.

    TR uses fourth-order differences; MK and KR differentiate spectrally.  On a
    graded mesh the spectral matrices act on w'*psi, which vanishes to higher
    order at the corner, and recover psi' and psi'' through the quotient
    identity psi' = ((w' psi)' - (w')' psi) / w'.

    Raises GeometryError when a spectral rule meets a mesh graded with
    p < MIN_SPECTRAL_GRADING.
    """
    if quad.method is not Method.TR and not mesh.identity and mesh.p < MIN_SPECTRAL_GRADING:
        raise GeometryError(
            f"spectral differentiation on a graded mesh needs p >= {MIN_SPECTRAL_GRADING}, got p={mesh.p}"
        )
    size = quad.size
    if quad.method is Method.TR:
        scheme = "FD4"
        d1 = fd4_diff(size, quad.h, 1)
        d2 = fd4_diff(size, quad.h, 2)
    else:
        scheme = "FFT"
        d1 = fft_diff(size, 1)
        d2 = fft_diff(size, 2)

    if mesh.identity:
        return (
            DiffMatrix(scheme, 1, False, d1, d1),
            DiffMatrix(scheme, 2, False, d2, d2),
        )

    _, w1, w2 = mesh.map(quad.nodes)
    if scheme == "FD4":
        d1_s, d2_s = d1, d2
    else:
        dw1 = d1 @ w1
        d2w1 = d2 @ w1
        d1_s = (d1 * w1[None, :] - np.diag(dw1)) / w1[:, None]
        d2_s = (d2 * w1[None, :] - np.diag(d2w1) - 2.0 * dw1[:, None] * d1_s) / w1[:, None]
    d1_t = d1_s / w1[:, None]
    d2_t = (d2_s - w2[:, None] * d1_t) / (w1**2)[:, None]
    return (
        DiffMatrix(scheme, 1, True, d1_t, d1_s),
        DiffMatrix(scheme, 2, True, d2_t, d2_s),
    )


def trig_interpolation_rows(nodes: np.ndarray, s) -> tuple[np.ndarray, np.ndarray]:
    """Rows evaluating the trigonometric interpolant and its derivative at *s*.

    The Nyquist mode is represented by cos(n (s - s_0)), matching the spectral
    first-derivative matrix, which sends it to zero on the nodes.
    """
    size = len(nodes)
    n = size // 2
    s = np.atleast_1d(np.asarray(s, dtype=float))
    d = s[:, None] - nodes[None, :]
    m = np.arange(1, n)
    md = d[..., None] * m
    alternating = (-1.0) ** np.arange(size)
    phase = n * (s - nodes[0])
    value = 1.0 + 2.0 * np.cos(md).sum(axis=-1) + alternating * np.cos(phase)[:, None]
    deriv = -2.0 * (m * np.sin(md)).sum(axis=-1) - n * alternating * np.sin(phase)[:, None]
    return value / size, deriv / size


def lagrange_rows(nodes: np.ndarray, s) -> tuple[np.ndarray, np.ndarray]:
    """Four-point Lagrange rows (value and derivative) at *s*, without wrap-around."""
    size = len(nodes)
    h = nodes[1] - nodes[0]
    s = np.atleast_1d(np.asarray(s, dtype=float))
    first = np.clip(np.floor((s - nodes[0]) / h).astype(int) - 1, 0, size - 4)
    value = np.zeros((len(s), size))
    deriv = np.zeros((len(s), size))
    for row, (x, start) in enumerate(zip(s, first)):
        pts = nodes[start : start + 4]
        for a in range(4):
            others = np.delete(pts, a)
            denom = np.prod(pts[a] - others)
            gaps = x - others
            value[row, start + a] = np.prod(gaps) / denom
            deriv[row, start + a] = sum(np.prod(np.delete(gaps, b)) for b in range(3)) / denom
    return value, deriv
