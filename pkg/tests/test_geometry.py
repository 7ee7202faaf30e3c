import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypadams import DomainError, NonConvergent, NotMonotone
from hypadams.geometry import (
    Point4, RadialProfile, ball_volume, ball_volume_derivative, ball_volume_inverse,
    convolve_radial, geodesic_distance, geodesic_distance_closed, mobius, radial_integral,
    rho_of_point, volume_bound_exp, volume_bound_sinh,
)
from hypadams.kernels import heat_kernel
from hypadams.quadrature import QuadratureConfig
from hypadams.spectral import spherical_transform

coord = st.floats(-0.45, 0.45, allow_nan=False)
point = st.tuples(coord, coord, coord, coord).map(Point4)


def test_rho_of_point_examples():
    assert rho_of_point(Point4([0, 0, 0, 0])) == 0.0
    r = float(mpmath.tanh(mpmath.mpf(1) / 2))
    assert rho_of_point(Point4([r, 0, 0, 0])) == pytest.approx(1.0, rel=1e-12)
    assert rho_of_point(Point4([0, 0.9, 0, 0])) == pytest.approx(math.log(19.0), rel=1e-12)


def test_point_rejects_boundary():
    with pytest.raises(DomainError):
        Point4([1.0, 0, 0, 0])
    with pytest.raises(DomainError):
        Point4([0.8, 0.8, 0, 0])
    with pytest.raises(DomainError):
        Point4([0.1, 0.2])


@given(st.floats(0.0, 0.999))
def test_rho_inverse_relation(r):
    rho = rho_of_point(Point4([r, 0, 0, 0]))
    assert math.tanh(rho / 2) == pytest.approx(r, rel=1e-12, abs=1e-300)


def _mobius_1d(a: float, x: float) -> float:
    # on a diameter the map is x -> (x - a) / (1 - a x) up to sign
    return -(x - a) / (1.0 - a * x)


def test_mobius_examples():
    x = Point4([0.1, -0.2, 0.3, 0.05])
    assert np.allclose(mobius(Point4([0, 0, 0, 0]), x).array, -x.array, atol=1e-15)
    assert np.allclose(mobius(x, x).array, 0.0, atol=1e-15)
    got = mobius(Point4([0.3, 0, 0, 0]), Point4([0.5, 0, 0, 0])).array
    assert got[0] == pytest.approx(_mobius_1d(0.3, 0.5), abs=1e-12)
    assert np.allclose(got[1:], 0.0, atol=1e-12)


@given(point, point)
def test_mobius_stays_in_ball(a, x):
    assert np.linalg.norm(mobius(a, x).array) < 1.0


@given(point, point)
def test_distance_symmetry_and_closed_form(x, y):
    d = geodesic_distance(x, y)
    assert d == pytest.approx(geodesic_distance(y, x), rel=1e-10, abs=1e-10)
    num = np.sum((x.array - y.array) ** 2)
    closed = math.acosh(1 + 2 * num / ((1 - x.norm ** 2) * (1 - y.norm ** 2)))
    assert d == pytest.approx(closed, rel=1e-9, abs=1e-9)
    assert geodesic_distance_closed(x, y) == pytest.approx(closed, rel=1e-9, abs=1e-9)


def test_distance_to_origin_and_self():
    y = Point4([0.2, 0.1, -0.3, 0.4])
    o = Point4([0, 0, 0, 0])
    assert geodesic_distance(y, y) == pytest.approx(0.0, abs=1e-12)
    assert geodesic_distance(o, y) == pytest.approx(rho_of_point(y), rel=1e-12)


@given(point, point, point)
def test_triangle_inequality(x, y, z):
    assert geodesic_distance(x, z) <= geodesic_distance(x, y) + geodesic_distance(y, z) + 1e-9


@given(point, point, point)
def test_distance_invariant_under_mobius(a, x, y):
    d0 = geodesic_distance(x, y)
    d1 = geodesic_distance(mobius(a, x), mobius(a, y))
    assert d1 == pytest.approx(d0, rel=1e-7, abs=1e-9)


def test_ball_volume_values():
    assert ball_volume(0.0) == 0.0
    ref = 2 * mpmath.pi ** 2 * mpmath.quad(lambda r: mpmath.sinh(r) ** 3, [0, 1])
    assert ball_volume(1.0) == pytest.approx(float(ref), rel=1e-10)
    assert ball_volume(1.0) == pytest.approx(6.8758, abs=1e-4)
    assert ball_volume(3.0) < volume_bound_sinh(3.0)


def test_volume_bounds_on_grid():
    rho = np.linspace(0.0, 20.0, 401)
    V = ball_volume(rho)
    assert np.all(V <= volume_bound_sinh(rho) * (1 + 1e-14))
    assert np.all(V <= volume_bound_exp(rho))


@given(st.floats(0.01, 10.0))
def test_volume_derivative_matches_difference(rho):
    h = 1e-5 * min(rho, 1.0)
    fd = (ball_volume(rho + h) - ball_volume(rho - h)) / (2 * h)
    assert fd == pytest.approx(ball_volume_derivative(rho), rel=1e-6)


@given(st.floats(0.0, 30.0))
def test_volume_inverse_round_trip(rho):
    assert ball_volume_inverse(ball_volume(rho)) == pytest.approx(rho, rel=1e-10, abs=1e-10)


def test_radial_profile_validation():
    with pytest.raises(DomainError):
        RadialProfile(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(NotMonotone):
        RadialProfile(np.linspace(0, 1, 3), np.array([1.0, 2.0, 0.0]), monotone_flag="nonincreasing")


def test_indicator_integral_is_volume():
    rho0 = 1.3
    val, _ = radial_integral(lambda r: np.where(r <= rho0, 1.0, 0.0), rho_max=rho0)
    assert val == pytest.approx(ball_volume(rho0), rel=1e-10)


def test_heat_mass_one():
    val, _ = radial_integral(lambda r: heat_kernel(0.5, r))
    assert val == pytest.approx(1.0, rel=1e-5)


def test_exponential_decay_two_tolerances():
    f = lambda r: np.exp(-4.0 * r)
    a, _ = radial_integral(f, QuadratureConfig(rel_tol=1e-8))
    b, _ = radial_integral(f, QuadratureConfig(rel_tol=1e-12, abs_tol=1e-300))
    # sinh^3 r = (e^{3r} - 3e^r + 3e^{-r} - e^{-3r}) / 8
    exact = 2 * math.pi ** 2 * (1 / 8) * (1 / 1 - 3 / 3 + 3 / 5 - 1 / 7)
    assert a == pytest.approx(exact, rel=1e-7)
    assert b == pytest.approx(exact, rel=1e-11)


def test_radial_integral_reports_no_decay():
    with pytest.raises(NonConvergent):
        radial_integral(lambda r: np.ones_like(r))


def _bump(c):
    return lambda r: np.exp(-c * np.asarray(r) ** 2)


def test_convolution_commutes():
    f, g = _bump(1.0), lambda r: np.exp(-2.0 * np.asarray(r) ** 2) * (1 + np.asarray(r))
    rho = np.array([0.3, 1.0, 2.0])
    a = convolve_radial(f, g, rho, method="angular").values
    b = convolve_radial(g, f, rho, method="angular").values
    assert np.allclose(a, b, rtol=1e-6)
    c = convolve_radial(f, g, rho).values
    assert np.allclose(a, c, rtol=1e-6)


def test_convolution_bilinear():
    f, g, h = _bump(1.0), _bump(2.0), _bump(3.0)
    rho = np.array([0.5, 1.5])
    lhs = convolve_radial(lambda r: 2 * f(r) + 3 * g(r), h, rho, method="angular").values
    rhs = (2 * convolve_radial(f, h, rho, method="angular").values
           + 3 * convolve_radial(g, h, rho, method="angular").values)
    assert np.allclose(lhs, rhs, rtol=1e-9)


def test_approximate_identity():
    sigma = 0.02
    raw = lambda r: np.exp(-np.asarray(r) ** 2 / (2 * sigma ** 2))
    mass, _ = radial_integral(raw, rho_max=20 * sigma)
    g = lambda r: raw(r) / mass
    f = lambda r: np.exp(-np.asarray(r) ** 2 / 2)
    rho = np.array([0.5, 1.0, 1.5])
    conv = convolve_radial(g, f, rho, method="angular").values
    assert np.allclose(conv, f(rho), rtol=2e-3)


def test_convolution_theorem():
    f, g = _bump(1.0), _bump(1.5)
    rho = np.linspace(0.0, 9.0, 181)
    conv = convolve_radial(f, g, rho, method="angular")
    lams = np.linspace(-6, 6, 25)
    lhs = spherical_transform(conv, lams).values
    rhs = spherical_transform(f, lams).values * spherical_transform(g, lams).values
    assert np.allclose(lhs, rhs, rtol=1e-4)
