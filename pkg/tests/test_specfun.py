"""Tests for cylinder functions and their regular parts."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from smoothcfie import specfun
from smoothcfie.specfun import DomainError


# ---------------------------------------------------------------------------
# Test 1: Values against scipy.special and the Wronskian
# ---------------------------------------------------------------------------


def test_values_match_scipy():
    x = np.array([0.1, 0.5, 1.0, 2.5, 10.0, 40.0])
    assert_allclose(specfun.bessel_j(0, x), special.jv(0, x), rtol=1e-14)
    assert_allclose(specfun.bessel_y(1, x), special.yv(1, x), rtol=1e-13)
    assert_allclose(specfun.hankel1(0, x), special.hankel1(0, x), rtol=1e-13)
    assert_allclose(specfun.hankel1(1, x), special.hankel1(1, x), rtol=1e-13)


def test_wronskian():
    """J1 Y0 - J0 Y1 = 2/(pi x)."""
    x = np.logspace(-6.0, np.log10(500.0), 1000)
    lhs = specfun.bessel_j(1, x) * specfun.bessel_y(0, x) - specfun.bessel_j(0, x) * specfun.bessel_y(1, x)
    assert_allclose(lhs, 2.0 / (np.pi * x), rtol=1e-11)


def test_wronskian_from_regular_parts():
    """Y0 and Y1 rebuilt from their regular parts, series branch included."""
    x = np.logspace(-6.0, np.log10(500.0), 1000)
    j0, j1 = specfun.bessel_j(0, x), specfun.bessel_j(1, x)
    log_half = np.log(0.5 * x)
    y0 = specfun.y0_regular(x) + (2.0 / np.pi) * j0 * log_half
    y1 = specfun.y1_regular(x) + (2.0 / np.pi) * j1 * log_half - 2.0 / (np.pi * x)
    assert_allclose(j1 * y0 - j0 * y1, 2.0 / (np.pi * x), rtol=1e-11)


def test_cylinder_bundle():
    value = specfun.cylinder(0, 1.0)
    assert value.j == pytest.approx(0.7651976865579666, rel=1e-14)
    assert value.y == pytest.approx(0.08825696421567696, rel=1e-13)
    assert value.h == complex(value.j, value.y)


# ---------------------------------------------------------------------------
# Test 2: Domain errors
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "call",
    [
        lambda: specfun.bessel_j(0, -1.0),
        lambda: specfun.bessel_y(0, 0.0),
        lambda: specfun.hankel1(1, np.nan),
        lambda: specfun.bessel_j(2, 1.0),
    ],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_domain_error_is_value_error():
    with pytest.raises(ValueError):
        specfun.bessel_y(1, -2.0)


def test_j0_at_zero():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(1, 0.0) == 0.0


# ---------------------------------------------------------------------------
# Test 3: Regular parts
# ---------------------------------------------------------------------------


def test_regular_parts_match_definition():
    z = np.array([0.05, 0.3, 1.0, 1.9, 2.0, 3.5, 8.0])
    log_half = np.log(0.5 * z)
    y0 = special.y0(z) - (2.0 / np.pi) * special.j0(z) * log_half
    y1 = special.y1(z) - (2.0 / np.pi) * special.j1(z) * log_half + 2.0 / (np.pi * z)
    assert_allclose(specfun.y0_regular(z), y0, atol=1e-13)
    assert_allclose(specfun.y1_regular(z), y1, atol=1e-12)


def test_regular_part_limits():
    assert specfun.y0_regular(np.array([0.0]))[0] == pytest.approx(2.0 * specfun.EULER_GAMMA / np.pi)
    assert specfun.y1_regular(np.array([0.0]))[0] == 0.0
    assert specfun.j1_over_x(0.0) == 0.5
    assert specfun.y1_regular_over_x(0.0) == pytest.approx((2.0 * specfun.EULER_GAMMA - 1.0) / (2.0 * np.pi))


def test_series_is_continuous_at_cutoff():
    below = specfun.y0_regular(np.array([2.0 - 1e-12]))[0]
    above = specfun.y0_regular(np.array([2.0]))[0]
    assert abs(below - above) < 1e-12
    below1 = specfun.y1_regular(np.array([2.0 - 1e-12]))[0]
    above1 = specfun.y1_regular(np.array([2.0]))[0]
    assert abs(below1 - above1) < 1e-12
