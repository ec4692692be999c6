"""Invariant suites run by ``smoothcfie selftest``.

Each suite returns ``(passed, detail)``; the runner never raises, a suite that
errors is reported as failed with the exception text as its detail.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from smoothcfie import geometry, kernels, quadrature, smoothing, specfun
from smoothcfie.linsolve import gmres

logger = logging.getLogger(__name__)

_SEED = 20240601


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"SUITE {self.name} {'PASS' if self.passed else 'FAIL'}"


def _wronskian() -> tuple[bool, str]:
    # J1(x) Y0(x) - J0(x) Y1(x) = 2 / (pi x)
    x = np.logspace(-6.0, np.log10(500.0), 1000)
    lhs = specfun.bessel_j(1, x) * specfun.bessel_y(0, x) - specfun.bessel_j(0, x) * specfun.bessel_y(1, x)
    err = float(np.max(np.abs(lhs * np.pi * x / 2.0 - 1.0)))
    return err <= 1e-11, f"max relative deviation {err:.2e} over {len(x)} points"


def _regular_parts() -> tuple[bool, str]:
    z = np.linspace(0.05, 6.0, 200)
    log_half = np.log(0.5 * z)
    y0 = special.y0(z) - (2.0 / np.pi) * special.j0(z) * log_half
    y1 = special.y1(z) - (2.0 / np.pi) * special.j1(z) * log_half + 2.0 / (np.pi * z)
    err = max(
        float(np.max(np.abs(specfun.y0_regular(z) - y0))),
        float(np.max(np.abs(specfun.y1_regular(z) - y1))),
    )
    return err <= 1e-12, f"max deviation {err:.2e}"


def _diff_matrices() -> tuple[bool, str]:
    n = 16
    t = quadrature.Quadrature(quadrature.Method.MK, n).nodes
    d1 = quadrature.fft_diff(2 * n, 1)
    d2 = quadrature.fft_diff(2 * n, 2)
    worst = 0.0
    for m in range(-(n - 1), n):
        wave = np.exp(1j * m * t)
        worst = max(worst, float(np.max(np.abs(d1 @ wave - 1j * m * wave))))
        worst = max(worst, float(np.max(np.abs(d2 @ wave + m * m * wave))) / max(1.0, m * m))
    rows = max(float(np.max(np.abs(d1.sum(axis=1)))), float(np.max(np.abs(d2.sum(axis=1)))))
    return worst <= 1e-10 and rows <= 1e-12, f"max error {worst:.2e}, max row sum {rows:.2e}"


def _mk_weights() -> tuple[bool, str]:
    n = 32
    r = quadrature.mk_weights(n)
    symmetric = float(np.max(np.abs(r[1:] - r[1:][::-1])))
    # the rule integrates log(4 sin^2(t/2)) cos(mt) exactly: -2*pi/m, and 0 for m = 0
    t = np.arange(2 * n) * np.pi / n
    worst = abs(float(r.sum()))
    for m in range(1, n):
        worst = max(worst, abs(float(r @ np.cos(m * t)) + 2.0 * np.pi / m))
    return symmetric <= 1e-13 and worst <= 1e-12, f"symmetry {symmetric:.2e}, moment error {worst:.2e}"


def _kr_weights() -> tuple[bool, str]:
    ok = True
    parts = []
    for order in (6, 10):
        w = quadrature.kr_weights(order)
        ok &= w[0] == 0.0 and abs(w[1:].sum() - 0.5) <= 1e-12
        diag = np.diag(quadrature.kr_matrix(order + 4, order))
        ok &= bool(np.all(diag == 0.0))
        parts.append(f"KR{order} sum {w[1:].sum():.15f}")
    return bool(ok), ", ".join(parts)


def _kernel_split() -> tuple[bool, str]:
    rng = np.random.default_rng(_SEED)
    curve = geometry.ParametricCurve("kite")
    k = 4.0
    t = rng.uniform(0.0, 2.0 * np.pi, 40)
    delta = rng.uniform(0.2, 3.0, 40) * rng.choice([-1.0, 1.0], 40)
    tau = t - delta
    target = curve.jet(t)
    source = curve.jet(tau)
    direct = kernels.free_kernels(target.point, source, k, target.normal)
    worst = 0.0
    for which, ref in (("L", direct.double), ("M", direct.single), ("W", direct.adjoint), ("H", direct.hyper)):
        split = kernels.split_block(which, target, source, kernels.wrap(delta), k)
        err = np.abs(split.value(kernels.wrap(delta)) - ref) / np.maximum(1.0, np.abs(ref))
        worst = max(worst, float(err.max()))
    return worst <= 1e-11, f"max reconstruction error {worst:.2e}"


def _smoothing() -> tuple[bool, str]:
    rng = np.random.default_rng(_SEED)
    curve = geometry.ParametricCurve("kite")
    anchor = smoothing.SmoothingAnchor.on_curve(curve, 0.7, 2.0, 2.0)
    y = rng.uniform(-2.0, 2.0, (200, 2))
    worst = max(
        float(np.max(np.abs(smoothing.helmholtz_residual(anchor, y, c)))) for c in ("p0", "p1", "f1")
    )
    p0, dn0 = smoothing.p0_eval(anchor, anchor.x0, anchor.n0)
    p1, dn1 = smoothing.p1_eval(anchor, anchor.x0, anchor.n0)
    anchors = max(abs(p0 - 1.0), abs(dn0 - 2.0j), abs(p1), abs(dn1))
    return worst <= 1e-12 and anchors <= 1e-14, f"Helmholtz residual {worst:.2e}, anchor data {anchors:.2e}"


def _winding() -> tuple[bool, str]:
    rng = np.random.default_rng(_SEED)
    curve = geometry.ParametricCurve("circle", {"radius": 1.0})
    points = rng.uniform(-2.0, 2.0, (1000, 2))
    radius = np.hypot(points[:, 0], points[:, 1])
    points = points[np.abs(radius - 1.0) > 1e-3]
    expected = np.hypot(points[:, 0], points[:, 1]) < 1.0
    wrong = int(np.count_nonzero(geometry.is_inside(curve, points) != expected))
    return wrong == 0, f"{wrong} misclassified of {len(points)}"


def _gmres() -> tuple[bool, str]:
    rng = np.random.default_rng(_SEED)
    diag = rng.uniform(1.0, 2.0, 50)
    b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    report = gmres(np.diag(diag), b, tol=1e-12)
    err = float(np.max(np.abs(report.solution - b / diag)))
    identity = gmres(np.eye(10), b[:10])
    ok = report.converged and err <= 1e-10 and identity.iterations == 1
    return ok, f"diagonal error {err:.2e}, identity iterations {identity.iterations}"


SUITES: dict[str, Callable[[], tuple[bool, str]]] = {
    "wronskian": _wronskian,
    "regular_parts": _regular_parts,
    "diff_matrices": _diff_matrices,
    "mk_weights": _mk_weights,
    "kr_weights": _kr_weights,
    "kernel_split": _kernel_split,
    "smoothing": _smoothing,
    "winding": _winding,
    "gmres": _gmres,
}


def run_selftest(names: list[str] | None = None) -> list[SuiteResult]:
    """Run the named suites (all by default) and collect their results."""
    results = []
    for name in names or list(SUITES):
        try:
            passed, detail = SUITES[name]()
        except Exception as exc:  # noqa: BLE001
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        logger.info("suite %s: %s (%s)", name, "pass" if passed else "fail", detail)
        results.append(SuiteResult(name, bool(passed), detail))
    return results
