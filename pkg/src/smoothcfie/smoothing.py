"""Plane-wave smoothing functions p0, p1 and the smoothing residuals rho_D, rho_S.

Both functions solve the Helmholtz equation exactly and match a density's value
and tangential derivative at an anchor point x0 on the boundary:

    p0(x0) = 1,  dn p0(x0) = i*eta,  ds p0(x0) = 0
    p1(x0) = 0,  dn p1(x0) = 0,      ds p1(x0) = 1,  ds dn p1(x0) = i*eta

Anchors are value objects whose fields may carry leading batch axes, so a block
of anchors can be evaluated against a block of boundary points by broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smoothcfie.geometry import CurveJet

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SmoothingAnchor:
    """Anchor point x0 with its frame, the curvature coefficient, k and eta."""

    t0: np.ndarray
    x0: np.ndarray
    n0: np.ndarray
    tau0: np.ndarray
    curv: np.ndarray
    k: float
    eta: float

    def __post_init__(self) -> None:
        if not self.k > 0.0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if not self.eta > 0.0:
            raise ValueError(f"coupling parameter must be positive, got {self.eta}")

    @classmethod
    def from_jet(cls, jet: CurveJet, t0, k: float, eta: float) -> "SmoothingAnchor":
        speed = jet.speed
        return cls(
            t0=np.asarray(t0, dtype=float),
            x0=jet.point,
            n0=jet.normal,
            tau0=jet.tangent,
            curv=jet.normal_curvature / speed**2,
            k=float(k),
            eta=float(eta),
        )

    @classmethod
    def on_curve(cls, curve, t0, k: float, eta: float) -> "SmoothingAnchor":
        return cls.from_jet(curve.jet(t0), t0, k, eta)

    def frame(self, y):
        """Normal and tangential coordinates of y - x0."""
        r = np.asarray(y) - self.x0
        return np.sum(r * self.n0, axis=-1), np.sum(r * self.tau0, axis=-1)


def p0_eval(anchor: SmoothingAnchor, y, ny):
    """Value and normal derivative (along *ny*) of p0 at *y*."""
    k, eta = anchor.k, anchor.eta
    un, _ = anchor.frame(y)
    c, s = np.cos(k * un), np.sin(k * un)
    value = c + (1j * eta / k) * s
    grad_n = -k * s + 1j * eta * c
    return value, grad_n * np.sum(anchor.n0 * ny, axis=-1)


def _p1_parts(anchor: SmoothingAnchor, y):
    k = anchor.k
    a = k / _SQRT2
    un, ut = anchor.frame(y)
    cn, sn = np.cos(a * un), np.sin(a * un)
    ct, st = np.cos(a * ut), np.sin(a * ut)
    f1 = (_SQRT2 / k) * st * cn
    g1 = (2.0 / k**2) * sn * st
    # gradients in the (n0, tau0) frame
    f1_n, f1_t = -st * sn, ct * cn
    g1_n, g1_t = (_SQRT2 / k) * cn * st, (_SQRT2 / k) * sn * ct
    return (f1, f1_n, f1_t), (g1, g1_n, g1_t)


def p1_eval(anchor: SmoothingAnchor, y, ny):
    """Value and normal derivative (along *ny*) of p1 = f1 + curv*g1 + i*eta*g1."""
    (f1, f1_n, f1_t), (g1, g1_n, g1_t) = _p1_parts(anchor, y)
    coeff = anchor.curv + 1j * anchor.eta
    value = f1 + coeff * g1
    grad_n = f1_n + coeff * g1_n
    grad_t = f1_t + coeff * g1_t
    ny_n = np.sum(anchor.n0 * ny, axis=-1)
    ny_t = np.sum(anchor.tau0 * ny, axis=-1)
    return value, grad_n * ny_n + grad_t * ny_t


def laplacian(anchor: SmoothingAnchor, y, component: str = "p0"):
    """Analytic Laplacian of p0, p1 or the f1 building block at *y*."""
    k = anchor.k
    un, ut = anchor.frame(y)
    if component == "p0":
        c, s = np.cos(k * un), np.sin(k * un)
        return -k**2 * c - 1j * anchor.eta * k * s
    a = k / _SQRT2
    cn, sn = np.cos(a * un), np.sin(a * un)
    ct, st = np.cos(a * ut), np.sin(a * ut)
    # second derivatives along n0 and tau0 of sin(a ut) cos(a un) and sin(a un) sin(a ut)
    f1_nn = -(_SQRT2 / k) * a**2 * st * cn
    f1_tt = -(_SQRT2 / k) * a**2 * st * cn
    if component == "f1":
        return f1_nn + f1_tt
    if component != "p1":
        raise ValueError(f"unknown smoothing component {component!r}")
    g1_nn = -(2.0 / k**2) * a**2 * sn * st
    g1_tt = -(2.0 / k**2) * a**2 * sn * st
    return f1_nn + f1_tt + (anchor.curv + 1j * anchor.eta) * (g1_nn + g1_tt)


def helmholtz_residual(anchor: SmoothingAnchor, y, component: str = "p0"):
    """Delta p + k^2 p; zero to round-off for every component."""
    if component == "p0":
        value = p0_eval(anchor, y, anchor.n0)[0]
    elif component == "p1":
        value = p1_eval(anchor, y, anchor.n0)[0]
    else:
        (value, _, _), _ = _p1_parts(anchor, y)
    return laplacian(anchor, y, component) + anchor.k**2 * value


def diag_second_derivs(anchor: SmoothingAnchor, curve):
    """d^2/dtau^2 of p0(x(tau)) and p1(x(tau)) at tau = t0.

    At the anchor the Hessians of p0 and p1 only couple normal with normal or
    normal with tangent directions, and x'(t0) is tangent, so only the gradient
    against x''(t0) survives.
    """
    d2 = curve.jet(anchor.t0).d2
    p0_dd = 1j * anchor.eta * np.sum(anchor.n0 * d2, axis=-1)
    p1_dd = np.sum(anchor.tau0 * d2, axis=-1) + 0j
    return p0_dd, p1_dd


def rho_pair(phi_tau, phi_t, dphi_t, anchor: SmoothingAnchor, y, ny, speed_t):
    """Smoothing residuals rho_D and rho_S of a density at boundary point *y*.

    *phi_t* and *dphi_t* are the density and its parametric derivative at the
    anchor, *speed_t* the anchor's parametric speed.
    """
    p0, dn_p0 = p0_eval(anchor, y, ny)
    p1, dn_p1 = p1_eval(anchor, y, ny)
    slope = np.asarray(dphi_t) / np.asarray(speed_t)
    rho_d = phi_tau - phi_t * p0 - slope * p1
    rho_s = 1j * anchor.eta * phi_tau - phi_t * dn_p0 - slope * dn_p1
    return rho_d, rho_s


def rho_grid(curve, phi, dphi, t, tau, k: float, eta: float):
    """rho_D and rho_S on the grid ``t[:, None]`` x ``tau[None, :]``.

    *phi* and *dphi* are callables returning the density and its parametric
    derivative at given parameters.
    """
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    anchor_jet = curve.jet(t).expand(-1)
    anchor = SmoothingAnchor.from_jet(anchor_jet, t[:, None], k, eta)
    source = curve.jet(tau).expand(0)
    return rho_pair(
        phi(tau)[None, :],
        phi(t)[:, None],
        dphi(t)[:, None],
        anchor,
        source.point,
        source.normal,
        anchor_jet.speed,
    )
