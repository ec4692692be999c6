"""Closed parametric boundaries, the Kress graded-mesh map and nearest-point search.

Every curve is 2*pi-periodic and traversed counterclockwise, so the unit normal
``(x2', -x1')/|x'|`` points into the unbounded exterior.  All evaluation is
vectorized: parameters may be arrays of any shape and every 2-vector field of a
:class:`CurveJet` carries a trailing axis of length 2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from smoothcfie import SmoothCfieError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

SMOOTH_SHAPES = ("circle", "ellipse", "kite")
CORNER_SHAPES = ("drop", "boomerang")
SHAPES = SMOOTH_SHAPES + CORNER_SHAPES

DEFAULT_SEED_GRID = 256
WINDING_NODES = 512
_NEWTON_MAX_ITER = 60
_NEAREST_CHUNK = 2048
_NEAR_SPACINGS = 4.0
_CORNER_TOL = 1e-9


class GeometryError(SmoothCfieError):
    """Raised for unknown shapes, bad shape parameters or bad grading exponents."""


@dataclass(frozen=True)
class CurveJet:
    """Position, first and second derivatives and the derived frame of a curve."""

    point: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.d1[..., 0], self.d1[..., 1])

    @property
    def tangent(self) -> np.ndarray:
        return self.d1 / self.speed[..., None]

    @property
    def normal(self) -> np.ndarray:
        speed = self.speed
        return np.stack((self.d1[..., 1] / speed, -self.d1[..., 0] / speed), axis=-1)

    @property
    def normal_curvature(self) -> np.ndarray:
        """n . x'' (the signed second-derivative component along the normal)."""
        return np.sum(self.normal * self.d2, axis=-1)

    def take(self, index) -> "CurveJet":
        return CurveJet(self.point[index], self.d1[index], self.d2[index])

    def expand(self, axis: int) -> "CurveJet":
        """Insert a broadcasting axis before the trailing vector axis."""
        axis = axis if axis >= 0 else axis - 1
        return CurveJet(
            np.expand_dims(self.point, axis),
            np.expand_dims(self.d1, axis),
            np.expand_dims(self.d2, axis),
        )


def _shape_jet(shape: str, params: dict[str, float], t: np.ndarray):
    c, s = np.cos(t), np.sin(t)
    if shape == "circle":
        r = params.get("radius", 1.0)
        return (r * c, r * s), (-r * s, r * c), (-r * c, -r * s)
    if shape == "ellipse":
        a, b = params.get("a", 1.0), params.get("b", 1.0)
        return (a * c, b * s), (-a * s, b * c), (-a * c, -b * s)
    if shape == "kite":
        c2, s2 = np.cos(2.0 * t), np.sin(2.0 * t)
        return (
            (c + 0.65 * (c2 - 1.0), 1.5 * s),
            (-s - 1.3 * s2, 1.5 * c),
            (-c - 2.6 * c2, -1.5 * s),
        )
    if shape == "drop":
        ch, sh = np.cos(0.5 * t), np.sin(0.5 * t)
        return (2.0 * sh, -s), (ch, -c), (-0.5 * sh, s)
    if shape == "boomerang":
        c3, s3 = np.cos(1.5 * t), np.sin(1.5 * t)
        return (
            (-(2.0 / 3.0) * s3, -s),
            (-c3, -c),
            (1.5 * s3, s),
        )
    raise GeometryError(f"unknown shape {shape!r}; expected one of {', '.join(SHAPES)}")


@dataclass(frozen=True)
class ParametricCurve:
    """A closed boundary: a catalogue shape moved by an offset and optionally mirrored.

    Mirroring reflects across the vertical axis (x -> -x).  The reflected curve
    is reparametrized by t -> 2*pi - t so it stays counterclockwise; the drop
    and boomerang formulas are only 2*pi-periodic up to orientation, so the
    reversed parameter is taken back into [0, 2*pi) before evaluation.
    """

    shape: str
    params: dict[str, float] = field(default_factory=dict)
    offset: tuple[float, float] = (0.0, 0.0)
    mirror: bool = False

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise GeometryError(
                f"unknown shape {self.shape!r}; expected one of {', '.join(SHAPES)}"
            )
        for key, value in self.params.items():
            if not np.isfinite(value) or value <= 0.0:
                raise GeometryError(f"shape parameter {key!r} must be positive, got {value}")

    @property
    def has_corner(self) -> bool:
        return self.shape in CORNER_SHAPES

    def jet(self, t) -> CurveJet:
        t = np.mod(np.asarray(t, dtype=float), TWO_PI)
        if self.mirror:
            t = np.mod(TWO_PI - t, TWO_PI)
        (x, y), (dx, dy), (ddx, ddy) = _shape_jet(self.shape, self.params, t)
        # X(t) = M x(2pi - t) with M = diag(-1, 1); X' = -M x'(.), X'' = M x''(.)
        if self.mirror:
            point = np.stack((-x, y), axis=-1)
            d1 = np.stack((dx, -dy), axis=-1)
            d2 = np.stack((-ddx, ddy), axis=-1)
        else:
            point = np.stack((x, y), axis=-1)
            d1 = np.stack((dx, dy), axis=-1)
            d2 = np.stack((ddx, ddy), axis=-1)
        point = point + np.asarray(self.offset, dtype=float)
        return CurveJet(point, np.broadcast_to(d1, point.shape), np.broadcast_to(d2, point.shape))

    def point(self, t) -> np.ndarray:
        return self.jet(t).point

    def shifted(self, dx: float) -> "ParametricCurve":
        return ParametricCurve(
            self.shape, dict(self.params), (self.offset[0] + dx, self.offset[1]), self.mirror
        )


def jet(curve, t) -> CurveJet:
    """Analytic position and derivatives of *curve* at parameter(s) *t*."""
    return curve.jet(t)


# ---------------------------------------------------------------------------
# Kress graded mesh
# ---------------------------------------------------------------------------


def _cubic_v(p: int, s: np.ndarray):
    c = 1.0 / p - 0.5
    u = (np.pi - s) / np.pi
    v = c * u**3 + (s - np.pi) / (p * np.pi) + 0.5
    v1 = -(3.0 * c / np.pi) * u**2 + 1.0 / (p * np.pi)
    v2 = (6.0 * c / np.pi**2) * u
    return v, v1, v2


def _power(p: int, v, v1, v2):
    vp = v**p
    vp1 = p * v ** (p - 1) * v1
    vp2 = p * (p - 1) * v ** (p - 2) * v1**2 + p * v ** (p - 1) * v2
    return vp, vp1, vp2


def kress_map(p: int, s):
    """Kress change of variable w(s) and its first two derivatives.

    ``w(s) = 2*pi*v(s)^p / (v(s)^p + v(2*pi - s)^p)`` with the cubic
    ``v(s) = (1/p - 1/2)((pi - s)/pi)^3 + (s - pi)/(p*pi) + 1/2``.
    """
    if isinstance(p, bool) or int(p) != p or p < 2:
        raise GeometryError(f"grading exponent must be an integer >= 2, got {p!r}")
    p = int(p)
    s = np.asarray(s, dtype=float)
    v, v1, v2 = _cubic_v(p, s)
    u, u1, u2 = _cubic_v(p, TWO_PI - s)
    u1 = -u1
    V, V1, V2 = _power(p, v, v1, v2)
    U, U1, U2 = _power(p, u, u1, u2)
    total = V + U
    total1 = V1 + U1
    numer = V1 * U - V * U1
    w = TWO_PI * V / total
    w1 = TWO_PI * numer / total**2
    w2 = TWO_PI * ((V2 * U - V * U2) / total**2 - 2.0 * numer * total1 / total**3)
    return w, w1, w2


@dataclass(frozen=True)
class GradedMesh:
    """Grading of the quadrature variable; ``p == 0`` is the identity map w(s) = s."""

    p: int = 0

    def __post_init__(self) -> None:
        if self.p != 0 and (isinstance(self.p, bool) or self.p < 2):
            raise GeometryError(f"grading exponent must be 0 or >= 2, got {self.p!r}")

    @property
    def identity(self) -> bool:
        return self.p == 0

    def nodes(self, n: int) -> np.ndarray:
        """The 2n quadrature nodes; shifted off the endpoints when graded."""
        j = np.arange(2 * n, dtype=float)
        if self.identity:
            return j * np.pi / n
        return (j + 0.5) * np.pi / n

    def map(self, s):
        s = np.asarray(s, dtype=float)
        if self.identity:
            return s, np.ones_like(s), np.zeros_like(s)
        return kress_map(self.p, s)


@dataclass(frozen=True)
class GradedCurve:
    """The curve seen through the grading map: X(s) = x(w(s))."""

    base: ParametricCurve
    mesh: GradedMesh

    @property
    def has_corner(self) -> bool:
        return self.base.has_corner

    def jet(self, s) -> CurveJet:
        s = np.mod(np.asarray(s, dtype=float), TWO_PI)
        w, w1, w2 = self.mesh.map(s)
        inner = self.base.jet(w)
        d1 = inner.d1 * w1[..., None]
        d2 = inner.d2 * (w1**2)[..., None] + inner.d1 * w2[..., None]
        return CurveJet(inner.point, d1, d2)

    def point(self, s) -> np.ndarray:
        return self.jet(s).point

    def parameter(self, s) -> np.ndarray:
        return self.mesh.map(s)[0]


def reparametrize(curve: ParametricCurve, mesh: GradedMesh):
    """Return the curve in the quadrature variable of *mesh*."""
    if mesh.identity:
        return curve
    return GradedCurve(curve, mesh)


def base_curve(curve) -> ParametricCurve:
    return curve.base if isinstance(curve, GradedCurve) else curve


# ---------------------------------------------------------------------------
# Nearest point and inside test
# ---------------------------------------------------------------------------


def _refine(curve, r: np.ndarray, t: np.ndarray, half_width: float) -> np.ndarray:
    lo = t - half_width
    hi = t + half_width
    for _ in range(_NEWTON_MAX_ITER):
        j = curve.jet(t)
        diff = j.point - r
        f = np.sum(diff * j.d1, axis=-1)
        fp = np.sum(j.d1 * j.d1, axis=-1) + np.sum(diff * j.d2, axis=-1)
        lo = np.where(f < 0.0, t, lo)
        hi = np.where(f > 0.0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_new = t - f / fp
        bad = ~np.isfinite(t_new) | (fp <= 0.0) | (t_new < lo) | (t_new > hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        step = np.abs(t_new - t)
        t = np.where(f == 0.0, t, t_new)
        if np.all((step <= 1e-15 * (1.0 + np.abs(t))) | (np.abs(f) <= 5e-13)):
            break
    return t


def nearest_point(curve, r, seed_grid_size: int = DEFAULT_SEED_GRID):
    """Parameter of the boundary point closest to *r*.

    Seeds from the two best sampled local minima among ``seed_grid_size``
    uniform samples, refines ``(x(t) - r) . x'(t) = 0`` from each with a Newton
    iteration safeguarded by bisection and keeps the closer result (the
    smaller parameter on ties).  *r* may be a 2-vector or an ``(m, 2)`` array;
    the result has the matching shape.
    """
    r = np.asarray(r, dtype=float)
    single = r.ndim == 1
    targets = np.atleast_2d(r)
    grid = np.arange(seed_grid_size) * (TWO_PI / seed_grid_size)
    samples = curve.jet(grid).point
    half_width = TWO_PI / seed_grid_size
    out = np.empty(len(targets))
    for start in range(0, len(targets), _NEAREST_CHUNK):
        chunk = targets[start : start + _NEAREST_CHUNK]
        dist2 = np.sum((chunk[:, None, :] - samples[None, :, :]) ** 2, axis=-1)
        local = (dist2 <= np.roll(dist2, 1, axis=1)) & (dist2 <= np.roll(dist2, -1, axis=1))
        ranked = np.argsort(np.where(local, dist2, np.inf), axis=1, kind="stable")
        first = _refine(curve, chunk, grid[ranked[:, 0]], half_width)
        second = _refine(curve, chunk, grid[ranked[:, 1]], half_width)
        d_first = np.sum((curve.jet(first).point - chunk) ** 2, axis=-1)
        d_second = np.sum((curve.jet(second).point - chunk) ** 2, axis=-1)
        first, second = np.mod(first, TWO_PI), np.mod(second, TWO_PI)
        take_second = (d_second < d_first) | ((d_second == d_first) & (second < first))
        out[start : start + len(chunk)] = np.where(take_second, second, first)
    return float(out[0]) if single else out


def distance_to_curve(curve, r) -> np.ndarray:
    t = nearest_point(curve, r)
    return np.linalg.norm(curve.jet(t).point - np.asarray(r, dtype=float), axis=-1)


def winding_number(curve, points, n_nodes: int = WINDING_NODES) -> np.ndarray:
    """Winding number of *curve* around each point, by the periodic trapezoidal rule."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    t = np.arange(n_nodes) * (TWO_PI / n_nodes)
    j = curve.jet(t)
    out = np.empty(len(points))
    for start in range(0, len(points), _NEAREST_CHUNK):
        chunk = points[start : start + _NEAREST_CHUNK]
        diff = j.point[None, :, :] - chunk[:, None, :]
        cross = diff[..., 0] * j.d1[None, :, 1] - diff[..., 1] * j.d1[None, :, 0]
        dist2 = np.sum(diff * diff, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(dist2 > 0.0, cross / dist2, 0.0)
        out[start : start + len(chunk)] = integrand.sum(axis=1) / n_nodes
    return out


def _side(curve, points: np.ndarray) -> np.ndarray:
    """Signed offset of each point along the normal at its nearest boundary point."""
    t = np.atleast_1d(nearest_point(curve, points))
    jet = curve.jet(t)
    normal = jet.normal
    if getattr(curve, "has_corner", False):
        at_corner = np.minimum(t, TWO_PI - t) < _CORNER_TOL
        if np.any(at_corner):
            # the outward direction at the corner bisects the one-sided normals
            sides = curve.jet(np.array([_CORNER_TOL, TWO_PI - _CORNER_TOL])).normal
            normal = np.where(at_corner[:, None], sides.sum(axis=0), normal)
    return np.sum((points - jet.point) * normal, axis=-1)


def is_inside(curve, points) -> np.ndarray:
    """True for points enclosed by *curve*.

    The winding-number rule loses accuracy within a few node spacings of the
    curve; there the side is read off the normal at the nearest point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    inside = np.abs(winding_number(curve, points)) > 0.5
    samples = curve.jet(np.arange(WINDING_NODES) * (TWO_PI / WINDING_NODES))
    reach = _NEAR_SPACINGS * float(samples.speed.max()) * TWO_PI / WINDING_NODES
    near = np.zeros(len(points), dtype=bool)
    for start in range(0, len(points), _NEAREST_CHUNK):
        chunk = points[start : start + _NEAREST_CHUNK]
        dist2 = np.sum((chunk[:, None, :] - samples.point[None, :, :]) ** 2, axis=-1)
        near[start : start + len(chunk)] = dist2.min(axis=1) < reach**2
    if np.any(near):
        inside[near] = _side(curve, points[near]) < 0.0
    return inside
