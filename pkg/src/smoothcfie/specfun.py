"""Cylinder functions of order 0 and 1 for real non-negative arguments.

J0, J1, Y0 and Y1 come from ``scipy.special``.  The kernel splittings also need
the parts of Y0 and Y1 that remain after the logarithmic and pole terms are
removed; those are evaluated from their ascending series near the origin, where
direct subtraction would cancel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from smoothcfie import SmoothCfieError

EULER_GAMMA = float(np.euler_gamma)
MAX_ARGUMENT = 700.0

# Below this argument the regular parts are summed from their series.
_SERIES_CUTOFF = 2.0
_SERIES_TERMS = 24


class DomainError(SmoothCfieError, ValueError):
    """Raised for arguments outside the domain of a cylinder function."""


@dataclass(frozen=True)
class CylinderValue:
    """J, Y and H = J + iY of one order at one argument."""

    j: float
    y: float
    h: complex


def _check_order(order: int) -> None:
    if order not in (0, 1):
        raise DomainError(f"order must be 0 or 1, got {order!r}")


def _as_argument(x, *, allow_zero: bool) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("argument must be finite")
    if allow_zero and np.any(arr < 0.0):
        raise DomainError("argument must be non-negative")
    if not allow_zero and np.any(arr <= 0.0):
        raise DomainError("argument must be positive (Y diverges at 0)")
    return arr


def bessel_j(order: int, x):
    """Bessel function of the first kind J_order(x) for x >= 0."""
    _check_order(order)
    arr = _as_argument(x, allow_zero=True)
    return special.j0(arr) if order == 0 else special.j1(arr)


def bessel_y(order: int, x):
    """Bessel function of the second kind Y_order(x) for x > 0."""
    _check_order(order)
    arr = _as_argument(x, allow_zero=False)
    return special.y0(arr) if order == 0 else special.y1(arr)


def hankel1(order: int, x):
    """Hankel function of the first kind H_order^(1)(x) = J + iY for x > 0."""
    _check_order(order)
    arr = _as_argument(x, allow_zero=False)
    if order == 0:
        return special.j0(arr) + 1j * special.y0(arr)
    return special.j1(arr) + 1j * special.y1(arr)


def cylinder(order: int, x: float) -> CylinderValue:
    """Evaluate J, Y and H of the given order at a single positive argument."""
    j = float(bessel_j(order, x))
    y = float(bessel_y(order, x))
    return CylinderValue(j=j, y=y, h=complex(j, y))


def y0_regular(z) -> np.ndarray:
    """Y0(z) - (2/pi) J0(z) log(z/2), analytic and even in z; equals 2*gamma/pi at 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < _SERIES_CUTOFF
    if np.any(small):
        q = 0.25 * z[small] ** 2
        j0 = np.ones_like(q)
        tail = np.zeros_like(q)
        term = np.ones_like(q)
        harmonic = 0.0
        for k in range(1, _SERIES_TERMS):
            term = term * (-q) / (k * k)
            harmonic += 1.0 / k
            j0 += term
            tail -= harmonic * term
        out[small] = (2.0 / np.pi) * (EULER_GAMMA * j0 + tail)
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = special.y0(zb) - (2.0 / np.pi) * special.j0(zb) * np.log(0.5 * zb)
    return out


def y1_regular(z) -> np.ndarray:
    """Y1(z) - (2/pi) J1(z) log(z/2) + 2/(pi z), analytic and odd in z; 0 at 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < _SERIES_CUTOFF
    if np.any(small):
        zs = z[small]
        q = -0.25 * zs**2
        term = 0.5 * zs
        acc = (special.digamma(1.0) + special.digamma(2.0)) * term
        for k in range(1, _SERIES_TERMS):
            term = term * q / (k * (k + 1))
            acc += (special.digamma(k + 1.0) + special.digamma(k + 2.0)) * term
        out[small] = -acc / np.pi
    big = ~small
    if np.any(big):
        zb = z[big]
        out[big] = (
            special.y1(zb)
            - (2.0 / np.pi) * special.j1(zb) * np.log(0.5 * zb)
            + 2.0 / (np.pi * zb)
        )
    return out


def j1_over_x(z) -> np.ndarray:
    """J1(z)/z with the limit 1/2 at z = 0."""
    z = np.asarray(z, dtype=float)
    safe = np.where(z == 0.0, 1.0, z)
    return np.where(z == 0.0, 0.5, special.j1(safe) / safe)


def y1_regular_over_x(z) -> np.ndarray:
    """y1_regular(z)/z with the limit (2*gamma - 1)/(2*pi) at z = 0."""
    z = np.asarray(z, dtype=float)
    safe = np.where(z == 0.0, 1.0, z)
    return np.where(
        z == 0.0, (2.0 * EULER_GAMMA - 1.0) / (2.0 * np.pi), y1_regular(safe) / safe
    )
