"""Parametrized boundary kernels and their splittings.

With ``G(x, y) = (i/4) H0(k|x - y|)`` and ``a = x(t) - x(tau)``, ``R = |a|``:

    L(t, tau) = dG/dn(y) |x'(tau)|          (double layer, K)
    M(t, tau) = G |x'(tau)|                 (single layer, S)
    W(t, tau) = dG/dn(x) |x'(tau)|          (adjoint double layer, K')
    H(t, tau) = d2G/dn(x)dn(y) |x'(tau)|    (hypersingular, N)

Each kernel splits as ``inv_sq/(t - tau)^2 + log_coeff*log|t - tau| + smooth``
with all three parts analytic.  The splittings are computed from the regular
parts of Y0 and Y1 so nothing is obtained by subtracting two large numbers,
and the diagonal limits are substituted where ``t == tau``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from smoothcfie.geometry import TWO_PI, CurveJet
from smoothcfie.specfun import EULER_GAMMA, j1_over_x, y0_regular, y1_regular_over_x

# Pairs closer than this are evaluated from the second-order Taylor polynomial
# of each split part about the diagonal. Its derivatives come from five-point
# central differences of the direct form with step TAYLOR_STEP / max(1, k).
NEAR_DIAGONAL = 1e-4
TAYLOR_STEP = 0.02

_Y0_REG_ORIGIN = 2.0 * EULER_GAMMA / np.pi


@dataclass(frozen=True)
class KernelSplit:
    """A kernel decomposed as inv_sq/(t-tau)^2 + log_coeff*log|t-tau| + smooth."""

    smooth: np.ndarray
    log_coeff: np.ndarray
    inv_sq_coeff: np.ndarray

    def value(self, delta) -> np.ndarray:
        """Full kernel at offsets *delta* = t - tau (off the diagonal only)."""
        delta = np.asarray(delta, dtype=float)
        return self.inv_sq_coeff / delta**2 + self.log_coeff * np.log(np.abs(delta)) + self.smooth

    def combine(self, other: "KernelSplit", scale: complex) -> "KernelSplit":
        """self + scale*other, component-wise."""
        return KernelSplit(
            self.smooth + scale * other.smooth,
            self.log_coeff + scale * other.log_coeff,
            self.inv_sq_coeff + scale * other.inv_sq_coeff,
        )


@dataclass(frozen=True)
class MaueSplit:
    """Kernels of the two terms of Maue's formula for the hypersingular operator.

    ``tangential`` is G itself (applied to the differentiated density and then
    differentiated along the target); ``normal`` is k^2 (n(t).n(tau)) G |x'(tau)|.
    """

    tangential: KernelSplit
    normal: KernelSplit


def wrap(delta) -> np.ndarray:
    """Reduce parameter differences to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(delta, dtype=float), TWO_PI)


class _PairData:
    """Geometric and cylinder-function quantities shared by all kernels of a block."""

    def __init__(self, target: CurveJet, source: CurveJet, delta: np.ndarray, k: float):
        self.k = k
        diag = delta == 0.0
        a = target.point - source.point
        r = np.hypot(a[..., 0], a[..., 1])
        t_speed = target.speed
        safe_r = np.where(diag, 1.0, r)
        safe_delta = np.where(diag, 1.0, delta)
        n_t = target.normal
        n_s = source.normal
        kappa_t = target.normal_curvature

        self.diag = diag
        self.speed = source.speed
        self.nn = np.sum(n_t * n_s, axis=-1)
        ratio = np.where(diag, t_speed, r / np.abs(safe_delta))
        self.lam = np.log(0.5 * k * ratio)
        self.delta_sq_over_r_sq = np.where(diag, 1.0 / t_speed**2, (safe_delta / safe_r) ** 2)

        an_s = np.sum(a * n_s, axis=-1)
        an_t = np.sum(a * n_t, axis=-1)
        # a.n vanishes quadratically on the diagonal; over R^2 it tends to +-kappa/(2|x'|^2)
        self.an_s = np.where(diag, 0.0, an_s)
        self.an_t = np.where(diag, 0.0, an_t)
        self.ans_over_r2 = np.where(diag, 0.5 * kappa_t / t_speed**2, an_s / safe_r**2)
        self.ant_over_r2 = np.where(diag, -0.5 * kappa_t / t_speed**2, an_t / safe_r**2)
        self.p_over_r2 = np.where(diag, 0.0, an_s * an_t / safe_r**2)
        self.p_over_r4 = np.where(
            diag, -0.25 * kappa_t**2 / t_speed**4, an_s * an_t / safe_r**4
        )

        z = k * r
        self.j0 = special.j0(z)
        self.j1_over_r = k * j1_over_x(z)
        self.y1r_over_r = k * y1_regular_over_x(z)
        self.y0r = np.where(diag, _Y0_REG_ORIGIN, y0_regular(z))
        # J0 - 2 J1/z = -J2, and its Y counterpart; both bounded at the origin
        self.j_combo = -special.jv(2, z)
        self.y_combo = self.y0r - 2.0 * self.y1r_over_r / k

    # Each smooth part collects the regular cylinder-function terms, the pole
    # terms left after the exact 1/R^2 cancellation, and lam times the log
    # coefficient (lam = log(kR / (2|t - tau|))).

    def split_l(self) -> KernelSplit:
        k, speed = self.k, self.speed
        log_c = -(k / TWO_PI) * self.j1_over_r * self.an_s * speed
        regular = 0.25j * k * (self.j1_over_r + 1j * self.y1r_over_r) * self.an_s
        smooth = (regular + self.ans_over_r2 / TWO_PI) * speed + self.lam * log_c
        return KernelSplit(smooth, log_c + 0j, np.zeros_like(smooth))

    def split_m(self) -> KernelSplit:
        speed = self.speed
        log_c = -self.j0 * speed / TWO_PI
        smooth = 0.25j * (self.j0 + 1j * self.y0r) * speed + self.lam * log_c
        return KernelSplit(smooth, log_c + 0j, np.zeros_like(smooth))

    def split_w(self) -> KernelSplit:
        k, speed = self.k, self.speed
        log_c = (k / TWO_PI) * self.j1_over_r * self.an_t * speed
        regular = -0.25j * k * (self.j1_over_r + 1j * self.y1r_over_r) * self.an_t
        smooth = (regular - self.ant_over_r2 / TWO_PI) * speed + self.lam * log_c
        return KernelSplit(smooth, log_c + 0j, np.zeros_like(smooth))

    def split_h(self) -> KernelSplit:
        k, speed = self.k, self.speed
        inv_sq = self.nn * self.delta_sq_over_r_sq * speed / TWO_PI
        log_c = (
            -(k**2 / TWO_PI) * self.j_combo * self.p_over_r2
            - (k / TWO_PI) * self.j1_over_r * self.nn
        ) * speed
        regular = (
            -self.p_over_r4 / np.pi
            + 0.25j * k**2 * (self.j_combo + 1j * self.y_combo) * self.p_over_r2
            + 0.25j * k * (self.j1_over_r + 1j * self.y1r_over_r) * self.nn
        )
        smooth = regular * speed + self.lam * log_c
        return KernelSplit(smooth, log_c + 0j, inv_sq + 0j)


def split_block(which: str, target: CurveJet, source: CurveJet, delta, k: float) -> KernelSplit:
    """Split of kernel *which* in {"L", "M", "W", "H"} for broadcast target/source jets."""
    data = _PairData(target, source, np.asarray(delta, dtype=float), float(k))
    if which == "L":
        return data.split_l()
    if which == "M":
        return data.split_m()
    if which == "W":
        return data.split_w()
    if which == "H":
        return data.split_h()
    raise ValueError(f"unknown kernel {which!r}")


def _split_on_curve(which: str, curve, t, tau, k: float) -> KernelSplit:
    t, tau = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(tau, dtype=float))
    delta = wrap(t - tau)
    split = split_block(which, curve.jet(t), curve.jet(tau), delta, k)
    near = (delta != 0.0) & (np.abs(delta) < NEAR_DIAGONAL)
    if not np.any(near):
        return split
    t_near = t[near]
    target = curve.jet(t_near)
    s = TAYLOR_STEP / max(1.0, k)
    at_diag = split_block(which, target, target, np.zeros_like(t_near), k)
    samples = {
        m: split_block(which, target, curve.jet(t_near - m * s), np.full_like(t_near, m * s), k)
        for m in (-2, -1, 1, 2)
    }
    d = delta[near]
    parts = []
    for name in ("smooth", "log_coeff", "inv_sq_coeff"):
        full = np.array(getattr(split, name), dtype=complex, copy=True)
        f0 = getattr(at_diag, name)
        f = {m: getattr(block, name) for m, block in samples.items()}
        slope = (8.0 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12.0 * s)
        curvature = (16.0 * (f[1] + f[-1]) - (f[2] + f[-2]) - 30.0 * f0) / (12.0 * s**2)
        full[near] = f0 + d * slope + 0.5 * d**2 * curvature
        parts.append(full)
    return KernelSplit(*parts)


def kernel_l(curve, t, tau, k: float) -> KernelSplit:
    """Double-layer kernel L(t, tau)."""
    return _split_on_curve("L", curve, t, tau, k)


def kernel_m(curve, t, tau, k: float) -> KernelSplit:
    """Single-layer kernel M(t, tau)."""
    return _split_on_curve("M", curve, t, tau, k)


def kernel_w(curve, t, tau, k: float) -> KernelSplit:
    """Adjoint double-layer kernel W(t, tau)."""
    return _split_on_curve("W", curve, t, tau, k)


def kernel_h(curve, t, tau, k: float) -> KernelSplit:
    """Hypersingular kernel H(t, tau)."""
    return _split_on_curve("H", curve, t, tau, k)


def kernel_classic(curve, t, tau, k: float, which: str):
    """Kernels of the classic operators S, K, K' and of Maue's form of N."""
    if which == "S":
        return kernel_m(curve, t, tau, k)
    if which == "K":
        return kernel_l(curve, t, tau, k)
    if which == "K'":
        return kernel_w(curve, t, tau, k)
    if which == "N-Maue":
        t_arr, tau_arr = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
        m = kernel_m(curve, t_arr, tau_arr, k)
        speed = curve.jet(tau_arr).speed
        nn = np.sum(curve.jet(t_arr).normal * curve.jet(tau_arr).normal, axis=-1)
        tangential = KernelSplit(m.smooth / speed, m.log_coeff / speed, m.inv_sq_coeff)
        scale = k**2 * nn
        normal = KernelSplit(scale * m.smooth, scale * m.log_coeff, m.inv_sq_coeff)
        return MaueSplit(tangential, normal)
    raise ValueError(f"unknown classic kernel {which!r}")


def mk_split(log_coeff, full, delta, diag_value):
    """Split an integrand into C1 log(4 sin^2((t-tau)/2)) + C2.

    *log_coeff* is the integrand's coefficient of log|t - tau| and *full* its
    value; both are taken off the diagonal.  C1 is half the log coefficient and
    C2 the remainder, with C2(t, t) = *diag_value*.
    """
    delta = np.asarray(delta, dtype=float)
    diag = delta == 0.0
    c1 = 0.5 * np.asarray(log_coeff)
    safe = np.where(diag, 1.0, delta)
    log_sin = np.where(diag, 0.0, np.log(4.0 * np.sin(0.5 * safe) ** 2))
    c2 = np.where(diag, diag_value, np.asarray(full) - c1 * log_sin)
    return c1, c2


# ---------------------------------------------------------------------------
# Kernels between a boundary and points off it
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeKernels:
    """Full kernel values from boundary sources to targets off the boundary.

    Every field already carries the source speed |x'(tau)|.  The target normal
    terms are zero when no target normal is supplied.
    """

    single: np.ndarray
    double: np.ndarray
    adjoint: np.ndarray
    hyper: np.ndarray


def free_kernels(targets, source: CurveJet, k: float, target_normals=None) -> FreeKernels:
    """G, dG/dn(y), dG/dn(x) and d2G/dn(x)dn(y), each times |x'(tau)|."""
    a = np.asarray(targets) - source.point
    r = np.hypot(a[..., 0], a[..., 1])
    z = k * r
    h0 = special.hankel1(0, z)
    h1 = special.hankel1(1, z)
    speed = source.speed
    an_s = np.sum(a * source.normal, axis=-1)
    single = 0.25j * h0 * speed
    double = 0.25j * k * h1 * an_s / r * speed
    if target_normals is None:
        zero = np.zeros_like(single)
        return FreeKernels(single, double, zero, zero)
    n_t = np.asarray(target_normals)
    an_t = np.sum(a * n_t, axis=-1)
    nn = np.sum(n_t * source.normal, axis=-1)
    adjoint = -0.25j * k * h1 * an_t / r * speed
    hyper = 0.25j * k * ((k * h0 - 2.0 * h1 / r) * an_s * an_t / r**2 + h1 * nn / r) * speed
    return FreeKernels(single, double, adjoint, hyper)
