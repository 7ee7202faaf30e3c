import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypadams import DomainError
from hypadams.functional import gradient_dV, l2_dV, random_bump, smooth_bump
from hypadams.geometry import RadialProfile, radial_integral
from hypadams.kernels import kernel_table
from hypadams.spectral import (
    INVERSION_CONSTANT, Multiplier, SpectralProfile, c_density, c_density_gamma,
    calibrate_inversion_constant, heat_plancherel_check, inverse_spherical_transform,
    literal_inversion_constant, plancherel, quadratic_form, spherical_function,
    spherical_function_angular, spherical_transform,
)

HALF = np.linspace(0.5, 8.0, 16)
SYM = np.r_[-HALF[::-1], HALF]


def _c_mpmath(lam: float) -> float:
    il = 1j * mpmath.mpf(lam)
    c = (mpmath.mpf(2) ** (3 - il) * mpmath.gamma(2) * mpmath.gamma(il)
         / (mpmath.gamma((3 + il) / 2) * mpmath.gamma((1 + il) / 2)))
    return float(1 / abs(c) ** 2)


@given(st.floats(1e-3, 50.0))
def test_c_density_even_positive(lam):
    v = c_density(lam)
    assert v > 0
    assert c_density(-lam) == v


def test_c_density_zero_limit():
    assert c_density(0.0) == 0.0
    assert c_density_gamma(0.0) == 0.0
    assert c_density(1e-4) / 1e-8 == pytest.approx(math.pi ** 2 / 256, rel=1e-6)


@pytest.mark.parametrize("lam", [0.3, 2.0, 7.5, 20.0])
def test_c_density_two_routes(lam):
    ref = _c_mpmath(lam)
    assert c_density(lam) == pytest.approx(ref, rel=1e-10)
    assert c_density_gamma(lam) == pytest.approx(ref, rel=1e-10)


def test_spherical_function_at_origin_and_even():
    lams = np.array([0.0, 1.0, 5.0, 13.0])
    assert np.allclose(spherical_function(lams, 0.0), 1.0, atol=1e-14)
    rho = np.linspace(0.1, 6, 7)
    assert np.allclose(spherical_function(-lams, rho), spherical_function(lams, rho), atol=1e-14)


@pytest.mark.parametrize("lam,rho", [(0.0, 0.5), (1.0, 1.0), (3.0, 2.5), (6.0, 0.8)])
def test_spherical_function_two_routes(lam, rho):
    assert spherical_function(lam, rho) == pytest.approx(spherical_function_angular(lam, rho), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 8.0), st.floats(0.2, 5.0))
def test_spherical_function_eigen_ode(lam, rho):
    h = 1e-2
    f = spherical_function(lam, rho + h * np.arange(-2, 3))
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    res = d2 + 3 / math.tanh(rho) * d1 + (9 + lam ** 2) / 4 * f[2]
    assert abs(res) < 1e-5


def test_spherical_function_rejects_negative_radius():
    with pytest.raises(DomainError):
        spherical_function(1.0, -0.1)


@pytest.mark.parametrize("t", [0.25, 1.0])
def test_heat_transform_oracle(t):
    rep = heat_plancherel_check(t)
    assert rep["max_relative_error"] < 1e-5
    assert rep["plancherel"]["relative_error"] < 1e-4


def test_inversion_constant_calibrated():
    rep = calibrate_inversion_constant(0.5)
    assert rep["relative_error"] < 1e-8
    # the literal constant differs by exactly 4 pi^2
    assert rep["literal_over_fitted"] == pytest.approx(4 * math.pi ** 2, rel=1e-8)
    assert literal_inversion_constant() == pytest.approx(4 * math.pi ** 2 * INVERSION_CONSTANT, rel=1e-14)


def test_green_transform():
    got = spherical_transform(kernel_table("green"), SYM, tail="oscillatory").values[16:]
    assert np.allclose(got, 4 / HALF ** 2, rtol=1e-4)


@pytest.mark.parametrize("alpha", [-2.25, 1.0])
def test_half_power_transform(alpha):
    got = spherical_transform(kernel_table("half_power", alpha), SYM, tail="oscillatory",
                              tail_powers=(0, 1, 2, 3)).values[16:]
    assert np.allclose(got, Multiplier.shifted(alpha, -0.5)(HALF), rtol=1e-3)


def test_zero_function():
    z = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    F = spherical_transform(z, SYM, rho_max=5.0)
    assert np.all(F.values == 0)
    assert np.all(inverse_spherical_transform(F, [0.0, 1.0]).values == 0)


def test_transform_is_even_and_real():
    F = spherical_transform(lambda r: np.exp(-np.asarray(r) ** 2), np.linspace(-10, 10, 81))
    assert np.isrealobj(F.values)
    assert F.evenness_defect() < 1e-14


def test_spectral_profile_needs_symmetric_grid():
    with pytest.raises(DomainError):
        SpectralProfile(np.array([0.0, 1.0, 2.0]), np.zeros(3))


def test_round_trip_gaussian():
    f = lambda r: np.exp(-np.asarray(r) ** 2)
    F = spherical_transform(f)
    rho = np.linspace(0.0, 6.0, 121)
    back = inverse_spherical_transform(F, rho)
    num, _ = radial_integral(RadialProfile(rho, (back.values - f(rho)) ** 2, interpolation_order="linear"))
    den, _ = radial_integral(RadialProfile(rho, f(rho) ** 2, interpolation_order="linear"))
    assert math.sqrt(num / den) < 1e-4


def test_plancherel_gaussian():
    rep = plancherel(lambda r: np.exp(-np.asarray(r) ** 2))
    assert rep["relative_error"] < 1e-4


def test_identity_multiplier():
    u = smooth_bump(radius=0.7)
    q = quadratic_form(u, Multiplier.identity(), rho_max=u.support_rho)
    assert q == pytest.approx(l2_dV(u), rel=1e-6)


def test_laplacian_multiplier_is_dirichlet_energy():
    u = smooth_bump(radius=0.8, c1=0.5)
    q = quadratic_form(u, Multiplier.laplacian(), rho_max=u.support_rho)
    assert q == pytest.approx(gradient_dV(u), rel=1e-4)


def test_multiplier_validation():
    with pytest.raises(DomainError):
        Multiplier.shifted(-3.0)
    m = Multiplier.gap() * Multiplier.shifted(1.0)
    assert m(2.0) == pytest.approx(1.0 * (13 / 4 + 1))
    assert Multiplier.constraint(1.0)(2.0) == pytest.approx(m(2.0))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_gap_form_positive_and_rayleigh(seed):
    u = random_bump(np.random.default_rng(seed))
    gap = quadratic_form(u, Multiplier.gap(), rho_max=u.support_rho)
    assert gap > 0
    assert gradient_dV(u) / l2_dV(u) > 2.25
