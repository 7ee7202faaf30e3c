import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypadams import DomainError
from hypadams.geometry import RadialProfile, convolve_radial, radial_integral
from hypadams.kernels import (
    ALPHA_CRITICAL, KernelMismatch, KernelSpec, alpha0_of, corollary33_rhs, default_eps0,
    green_kernel, half_power_kernel, heat_kernel, kernel_table, lemma31_rhs, lemma32_rhs_first,
    lemma32_rhs_second, verify_section3, write_kernel_csv,
)

GRID = np.geomspace(0.01, 12.0, 40)


@pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
def test_heat_mass(t):
    val, _ = radial_integral(lambda r: heat_kernel(t, r))
    assert val == pytest.approx(1.0, rel=1e-5)


def test_heat_positive_at_origin_and_far():
    assert heat_kernel(0.5, 0.0) > 0
    assert heat_kernel(0.5, 12.0) > 0


def test_heat_semigroup():
    rho = np.linspace(0.0, 14.0, 561)
    p = RadialProfile(rho, heat_kernel(0.5, rho))
    got = convolve_radial(p, p, [0.5, 1.0, 2.0], method="angular").values
    assert np.allclose(got, heat_kernel(1.0, [0.5, 1.0, 2.0]), rtol=1e-4)


def test_heat_off_diagonal_vanishes_as_t_shrinks():
    ts = [0.2, 0.1, 0.05, 0.02, 0.01]
    vals = [heat_kernel(t, 1.5) for t in ts]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-20


def test_green_bound_and_monotone():
    g = green_kernel(GRID)
    assert np.all(g <= lemma31_rhs(GRID))
    assert np.all(np.diff(g) < 0)


def test_green_euclidean_limit():
    ratio = green_kernel(0.01) * 0.01 ** 2 * 4 * math.pi ** 2
    assert ratio == pytest.approx(1.0, rel=0.02)


def test_green_domain():
    with pytest.raises(DomainError):
        green_kernel(0.0)
    with pytest.raises(DomainError):
        half_power_kernel(-3.0, 1.0)
    with pytest.raises(DomainError):
        heat_kernel(0.0, 1.0)


def test_critical_half_power_bounds():
    h = half_power_kernel(ALPHA_CRITICAL, GRID)
    assert np.all(h <= lemma32_rhs_first(GRID))
    assert np.all(h <= lemma32_rhs_second(GRID))
    assert np.all(h <= corollary33_rhs(GRID))


@settings(max_examples=15, deadline=None)
@given(st.floats(-2.25, 10.0), st.floats(0.02, 10.0))
def test_domination_by_critical(alpha, rho):
    assert half_power_kernel(alpha, rho) <= half_power_kernel(ALPHA_CRITICAL, rho) * (1 + 1e-12)


@pytest.mark.parametrize("alpha", [-2.25, -1.0, 0.25, 4.0])
def test_bessel_and_quadrature_paths(alpha):
    rho = np.array([0.05, 0.5, 3.0, 8.0])
    half_power_kernel(alpha, rho, method="checked")
    a = half_power_kernel(alpha, rho, method="bessel")
    b = half_power_kernel(alpha, rho, method="quadrature")
    assert np.allclose(a, b, rtol=1e-8)


def test_kernel_mismatch_is_a_domain_error():
    assert issubclass(KernelMismatch, DomainError)


def test_square_root_identity_sampled():
    h = kernel_table("half_power", ALPHA_CRITICAL)
    rho = np.array([0.3, 1.5, 5.0])
    conv = convolve_radial(h, h, rho).values
    assert np.allclose(conv, green_kernel(rho), rtol=1e-3)


def test_kernel_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec("heat")
    with pytest.raises(DomainError):
        KernelSpec("half_power", alpha=-2.5)
    with pytest.raises(DomainError):
        KernelSpec("poisson")
    assert KernelSpec("half_power", alpha=-2.25).critical
    vals, errs = KernelSpec("green").evaluate([1.0, 2.0])
    assert np.all(errs >= 0) and np.all(errs < 1e-8 * vals)


def test_eps0_choice():
    e0, a0 = default_eps0(1.0)
    assert 0 < e0 < 1 and a0 > 0
    assert alpha0_of(1.0, e0) == pytest.approx(a0)
    assert a0 == pytest.approx(0.5 * (math.sqrt(3.25) - 1.5))
    with pytest.raises(DomainError):
        default_eps0(0.0)


def test_single_point_grid():
    reports = verify_section3([2.0], alphas=(1.0,))
    assert all(len(r.rho_grid) == 1 for r in reports)
    assert all(r.all_pass for r in reports)


def test_empty_grid():
    assert verify_section3([]) == []


def test_csv_schema(tmp_path):
    path = tmp_path / "k.csv"
    write_kernel_csv(path, [1.0, 2.0], green_kernel([1.0, 2.0]), [0.0, 0.0])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["rho", "value", "err_estimate"]
    assert float(rows[1][1]) == green_kernel(1.0)
