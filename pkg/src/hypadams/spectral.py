"""Radial Helgason-Fourier analysis on the four-dimensional ball.

Conventions for radial f:

* transform      f^(lam) = 2 pi^2 int_0^inf f(rho) phi_lam(rho) sinh^3 rho d rho
* inversion      f(rho)  = K int_R f^(lam) phi_lam(rho) |c(lam)|^-2 d lam
* Plancherel     int |f|^2 dV = K int_R |f^(lam)|^2 |c(lam)|^-2 d lam

with K = 1 / (2 pi^3).  The value of K is fixed by the heat kernel, see
:func:`calibrate_inversion_constant`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import DomainError, NonConvergent
from .geometry import SPHERE_AREA, RadialProfile

INVERSION_CONSTANT = 1.0 / (2.0 * math.pi ** 3)
DEFAULT_LAMBDA_MAX = 24.0
DEFAULT_LAMBDA_POINTS = 2048
TAIL_LAMBDA_MIN = 0.2


def literal_inversion_constant(n: int = 4) -> float:
    """D_n |S^{n-1}| for D_n = 1 / (2^{3-n} pi |S^{n-1}|).

    This is the radial constant obtained by averaging the plane-wave
    inversion formula over the sphere with its unnormalized measure.  It does
    not reproduce the heat kernel; :func:`calibrate_inversion_constant`
    reports the discrepancy.
    """
    area = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
    d_n = 1.0 / (2.0 ** (3 - n) * math.pi * area)
    return d_n * area


# ---------------------------------------------------------------- c-function

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
)


def log_gamma_real_part(z):
    """Re log Gamma(z) for complex z (Lanczos, g = 7, with reflection)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape)
    left = z.real < 0.5
    if np.any(left):
        zl = z[left]
        # Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        out[left] = (math.log(math.pi) - np.log(np.abs(np.sin(math.pi * zl)))
                     - log_gamma_real_part(1.0 - zl))
    zr = z[~left] - 1.0
    x = np.full(zr.shape, _LANCZOS[0], dtype=complex)
    for i, p in enumerate(_LANCZOS[1:], start=1):
        x = x + p / (zr + i)
    t = zr + _LANCZOS_G + 0.5
    lg = 0.5 * math.log(2.0 * math.pi) + (zr + 0.5) * np.log(t) - t + np.log(x)
    out[~left] = lg.real
    return out


def c_density(lam):
    """|c(lam)|^-2 = pi lam (1 + lam^2) tanh(pi lam / 2) / 128 (n = 4)."""
    lam = np.asarray(lam, dtype=float)
    out = math.pi * lam * (1.0 + lam * lam) * np.tanh(0.5 * math.pi * lam) / 128.0
    return float(out) if out.ndim == 0 else out


def c_density_gamma(lam):
    """|c(lam)|^-2 from the gamma-function form of c (independent route)."""
    lam = np.asarray(lam, dtype=float)
    flat = np.atleast_1d(lam).ravel()
    out = np.zeros(flat.shape)
    nz = flat != 0.0
    il = 1j * flat[nz]
    re_log_c = ((3.0) * math.log(2.0) + log_gamma_real_part(il)
                - log_gamma_real_part(0.5 * (3.0 + il)) - log_gamma_real_part(0.5 * (1.0 + il)))
    out[nz] = np.exp(-2.0 * re_log_c)
    out = out.reshape(lam.shape)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------- spherical function

def spherical_function(lam, rho):
    """phi_lam(rho) through the Abel integral

        phi_lam(rho) = 4 sqrt(2) / (pi sinh^2 rho) int_0^rho cos(lam u / 2) sqrt(cosh rho - cosh u) du.

    Accepts scalars or 1-d arrays; the result has shape (len(lam), len(rho))
    with scalar axes dropped.
    """
    lam_a = np.abs(np.atleast_1d(np.asarray(lam, dtype=float)))
    rho_a = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho_a < 0):
        raise DomainError("rho must be nonnegative")
    tab = _backend.spherical_table(lam_a, rho_a)
    if np.ndim(rho) == 0:
        tab = tab[:, 0]
    if np.ndim(lam) == 0:
        tab = tab[0]
    return float(tab) if np.ndim(tab) == 0 else tab


def spherical_function_angular(lam: float, rho: float, order: int = 96) -> float:
    """phi_lam(rho) as the sphere average of the plane waves e_{lam, zeta}.

    (2/pi) int_0^pi (cosh rho - sinh rho cos th)^(-(3 + i lam)/2) sin^2 th dth,
    with the base written as e^rho sin^2(th/2) + e^-rho cos^2(th/2).
    Gauss-Legendre with ``order`` nodes; accurate while the peak near
    th = 0 (width about e^-rho) is resolved, i.e. for moderate rho.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    th = 0.5 * math.pi * (x + 1.0)
    w = 0.5 * math.pi * w
    b = math.exp(rho) * np.sin(0.5 * th) ** 2 + math.exp(-rho) * np.cos(0.5 * th) ** 2
    vals = b ** -1.5 * np.cos(0.5 * lam * np.log(b)) * np.sin(th) ** 2
    return float(2.0 / math.pi * (vals @ w))


# -------------------------------------------------------------- data types

def default_lambda_grid(lam_max: float = DEFAULT_LAMBDA_MAX,
                        n: int = DEFAULT_LAMBDA_POINTS) -> np.ndarray:
    return np.linspace(-lam_max, lam_max, n)


@dataclass
class SpectralProfile:
    lambda_grid: np.ndarray
    values: np.ndarray
    density: np.ndarray = field(default=None)

    def __post_init__(self):
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.density is None:
            self.density = c_density(np.abs(self.lambda_grid))
        if np.any(np.diff(self.lambda_grid) <= 0):
            raise DomainError("lambda grid must be strictly increasing")
        if not np.allclose(self.lambda_grid, -self.lambda_grid[::-1], rtol=0, atol=1e-12):
            raise DomainError("lambda grid must be symmetric about 0")

    def evenness_defect(self) -> float:
        v = self.values
        scale = max(float(np.max(np.abs(v))), 1e-300)
        return float(np.max(np.abs(v - v[::-1]))) / scale

    def __mul__(self, other: "SpectralProfile") -> "SpectralProfile":
        return SpectralProfile(self.lambda_grid, self.values * other.values, self.density)


@dataclass(frozen=True)
class Multiplier:
    """m(lam) = prod_i ((9 + lam^2)/4 + shift_i)^power_i.

    The shift -9/4 gives the gap-subtracted symbol lam^2/4.
    """

    factors: tuple = ((0.0, 1.0),)

    def __post_init__(self):
        for shift, _ in self.factors:
            if shift < -2.25 - 1e-15:
                raise DomainError("shifts below -9/4 make the symbol change sign")

    @classmethod
    def laplacian(cls, gamma: float = 1.0) -> "Multiplier":
        return cls(((0.0, gamma),))

    @classmethod
    def shifted(cls, alpha: float, gamma: float = 1.0) -> "Multiplier":
        return cls(((alpha, gamma),))

    @classmethod
    def gap(cls, gamma: float = 1.0) -> "Multiplier":
        return cls(((-2.25, gamma),))

    @classmethod
    def identity(cls) -> "Multiplier":
        return cls(())

    @classmethod
    def constraint(cls, alpha: float) -> "Multiplier":
        """Symbol of (-Delta - 9/4)(-Delta + alpha)."""
        return cls(((-2.25, 1.0), (alpha, 1.0)))

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        return Multiplier(self.factors + other.factors)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        base = 0.25 * (9.0 + lam * lam)
        out = np.ones_like(base)
        for shift, power in self.factors:
            if shift == -2.25:
                out = out * (0.25 * lam * lam) ** power
            else:
                out = out * (base + shift) ** power
        return out


# ------------------------------------------------------------- quadrature

@lru_cache(maxsize=32)
def _rho_rule(R: float, panel: float = 0.5, order: int = 20):
    """Composite Gauss-Legendre nodes on [0, R], graded towards 0."""
    edges = [0.0] + [panel * 2.0 ** -k for k in range(12, 0, -1)]
    n_uniform = max(1, int(math.ceil((R - panel) / panel)))
    edges += list(np.linspace(panel, R, n_uniform + 1))
    x, w = np.polynomial.legendre.leggauss(order)
    a = np.array(edges[:-1])
    b = np.array(edges[1:])
    keep = b > a
    a, b = a[keep], b[keep]
    nodes = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * x[None, :]
    weights = (0.5 * (b - a))[:, None] * w[None, :]
    nodes, weights = nodes.ravel(), weights.ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


_PHI_CACHE: dict = {}


def _phi_table(lams: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    key = (lams.tobytes(), rhos.tobytes())
    tab = _PHI_CACHE.get(key)
    if tab is None:
        if len(_PHI_CACHE) >= 12:
            _PHI_CACHE.pop(next(iter(_PHI_CACHE)))
        tab = _backend.spherical_table(lams, rhos)
        tab.flags.writeable = False
        _PHI_CACHE[key] = tab
    return tab


def _decay_radius(f: Callable, start: float = 1.0, limit: float = 80.0) -> float:
    """Radius beyond which |f| sinh^3 phi_0 is negligible (1e-17 of its peak).

    phi_0(rho) <= (1 + rho) e^{-3 rho / 2} bounds every |phi_lam|.
    """
    grid = np.arange(start, limit + 1e-9, 0.5)
    vals = (np.abs(np.asarray(f(grid), dtype=float)) * np.sinh(grid) ** 3
            * (1.0 + grid) * np.exp(-1.5 * grid))
    peak = float(np.max(vals)) if len(vals) else 0.0
    if peak == 0.0:
        return start
    small = np.nonzero(vals < 1e-17 * peak)[0]
    for i in small:
        if np.all(vals[i:] < 1e-17 * peak):
            return float(grid[i])
    raise NonConvergent("profile does not decay fast enough for a plain transform; "
                        "use an oscillatory tail model")


def _source(f) -> Callable:
    if isinstance(f, RadialProfile):
        return f
    if callable(f):
        return f
    raise DomainError("expected a RadialProfile or a callable")


def _laguerre(n: int = 48):
    return np.polynomial.laguerre.laggauss(n)


def _tail_moments(k: float, R: float, powers: Sequence[int]) -> np.ndarray:
    """E_j = int_R^inf rho^-j e^{i k rho} d rho, by rotating to R + i y."""
    x, w = _laguerre()
    y = x / k
    out = []
    for j in powers:
        if j == 0:
            out.append(1j * np.exp(1j * k * R) / k)
        else:
            out.append(1j * np.exp(1j * k * R) / k * np.sum(w * (R + 1j * y) ** (-float(j))))
    return np.array(out)


def spherical_transform(f, lambda_grid=None, *, rho_max: float | None = None,
                        tail: str | None = None, tail_powers: Sequence[int] = (0,),
                        ) -> SpectralProfile:
    """Radial transform f^(lam) on a symmetric lambda grid.

    ``tail=None`` integrates to the decay radius of ``f`` (or ``rho_max``).
    ``tail='oscillatory'`` handles kernels with f sinh^3 ~ e^{3 rho / 2} times
    an algebraic factor, whose transforms converge only in the Abel sense:
    the integrand is summed up to R, fitted on the last two periods by
    sum_j rho^-j (a_j cos + b_j sin)(lam rho / 2), and the fitted model is
    integrated to infinity analytically.  Values with |lam| below
    ``TAIL_LAMBDA_MIN`` are returned as NaN in that mode.
    """
    lams = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    fs = _source(f)
    absl = np.abs(lams)
    uniq, inv = np.unique(absl, return_inverse=True)
    if tail is None:
        if rho_max is None:
            if isinstance(fs, RadialProfile) and fs.func is None:
                rho_max = float(fs.rho_grid[-1])
            else:
                rho_max = _decay_radius(fs)
        R = float(rho_max)
        nodes, weights = _rho_rule(R)
        fw = SPHERE_AREA * np.asarray(fs(nodes), dtype=float) * np.sinh(nodes) ** 3 * weights
        vals = _phi_table(uniq, nodes) @ fw
        return SpectralProfile(lams, vals[inv])
    if tail != "oscillatory":
        raise DomainError(f"unknown tail model {tail!r}")
    usable = uniq >= TAIL_LAMBDA_MIN
    vals = np.full(uniq.shape, np.nan)
    if np.any(usable):
        lam_min = float(uniq[usable].min())
        R = float(rho_max) if rho_max is not None else max(24.0, 4.0 * math.pi / lam_min + 16.0)
        R = round(R, 6)
        nodes, weights = _rho_rule(R)
        fw = SPHERE_AREA * np.asarray(fs(nodes), dtype=float) * np.sinh(nodes) ** 3
        body = _phi_table(uniq[usable], nodes) @ (fw * weights)
        tails = np.array([_oscillatory_tail(fs, lam, R, tail_powers) for lam in uniq[usable]])
        vals[usable] = body + tails
    return SpectralProfile(lams, vals[inv])


def _oscillatory_tail(f: Callable, lam: float, R: float, powers: Sequence[int]) -> float:
    k = 0.5 * lam
    P = 4.0 * math.pi / lam
    m = max(48, 12 * len(powers) + 24)
    xs = np.linspace(R - P, R, m)
    ys = SPHERE_AREA * np.asarray(f(xs), dtype=float) * np.sinh(xs) ** 3 * spherical_function(lam, xs)
    cols = []
    for j in powers:
        cols += [xs ** (-float(j)) * np.cos(k * xs), xs ** (-float(j)) * np.sin(k * xs)]
    M = np.stack(cols, 1)
    scale = np.max(np.abs(M), axis=0)
    co, *_ = np.linalg.lstsq(M / scale, ys, rcond=None)
    co = co / scale
    E = _tail_moments(k, R, powers)
    return float(sum(co[2 * i] * E[i].real + co[2 * i + 1] * E[i].imag for i in range(len(powers))))


def inverse_spherical_transform(F: SpectralProfile, rho_grid,
                                constant: float = INVERSION_CONSTANT) -> RadialProfile:
    """f(rho) = K int F(lam) phi_lam(rho) |c(lam)|^-2 d lam (trapezoid in lam)."""
    rho = np.asarray(rho_grid, dtype=float)
    lams = F.lambda_grid
    w = _trapezoid_weights(lams)
    tab = _phi_table(np.abs(lams), rho)
    vals = constant * ((np.real(F.values) * F.density * w) @ tab)
    return RadialProfile(rho, vals, name="inverse transform")


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    if len(x) < 2:
        return w
    d = np.diff(x)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def spectral_integral(values: np.ndarray, lams: np.ndarray) -> float:
    """K int values(lam) |c(lam)|^-2 d lam over the given symmetric grid."""
    return INVERSION_CONSTANT * float(np.sum(values * c_density(np.abs(lams)) * _trapezoid_weights(lams)))


def quadratic_form(u, m: Multiplier | Callable, lambda_grid=None, *,
                   rho_max: float | None = None) -> float:
    """int (A u) u dV for the operator A with symbol ``m``, via Plancherel."""
    lams = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    uh = spherical_transform(u, lams, rho_max=rho_max)
    return spectral_integral(np.asarray(m(lams)) * np.abs(uh.values) ** 2, lams)


def plancherel(f, lambda_grid=None, *, rho_max: float | None = None) -> dict:
    """Both sides of the Plancherel identity plus the literal-constant variant."""
    from .geometry import radial_integral
    from .quadrature import QuadratureConfig

    lams = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    fh = spherical_transform(f, lams, rho_max=rho_max)
    spec = float(np.sum(np.abs(fh.values) ** 2 * fh.density * _trapezoid_weights(lams)))
    fs = _source(f)
    R = rho_max if rho_max is not None else (
        float(fs.rho_grid[-1]) if isinstance(fs, RadialProfile) and fs.func is None else _decay_radius(fs))
    lhs, _ = radial_integral(lambda r: np.asarray(fs(r), dtype=float) ** 2,
                             QuadratureConfig(rel_tol=1e-12, abs_tol=1e-300), rho_max=R)
    rhs = INVERSION_CONSTANT * spec
    return {
        "lhs": lhs,
        "rhs": rhs,
        "relative_error": abs(rhs - lhs) / abs(lhs) if lhs else abs(rhs),
        "rhs_literal_constant": literal_inversion_constant() * spec,
        "fitted_constant": lhs / spec if spec else float("nan"),
    }


def calibrate_inversion_constant(t: float = 0.5) -> dict:
    """Fit K from the heat kernel at the origin and compare with the literal constant.

    p_t(0) = K int e^{-t(9 + lam^2)/4} |c(lam)|^-2 d lam determines K.
    """
    from .kernels import heat_kernel
    from .quadrature import QuadratureConfig, integrate

    cfg = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-300)
    spec, _ = integrate(lambda l: 2.0 * np.exp(-t * (9.0 + l * l) / 4.0) * c_density(l), 0.0, math.inf, cfg)
    fitted = heat_kernel(t, 0.0) / spec
    literal = literal_inversion_constant()
    return {
        "t": t,
        "fitted": fitted,
        "implemented": INVERSION_CONSTANT,
        "literal": literal,
        "literal_over_fitted": literal / fitted,
        "relative_error": abs(fitted - INVERSION_CONSTANT) / INVERSION_CONSTANT,
    }


def heat_plancherel_check(t: float, lam_max: float = 8.0, n_lambda: int = 33) -> dict:
    """Transform of the heat kernel against e^{-t (9 + lam^2)/4}, plus the L^2 round trip.

    The kernel is evaluated directly on the radial quadrature nodes; the
    transform is taken on ``n_lambda`` points of [0, lam_max] (mirrored to a
    symmetric grid).
    """
    from .kernels import heat_kernel

    if not t > 0:
        raise DomainError("t must be positive")
    R = 3.0 + 12.0 * math.sqrt(t)
    f = lambda r: heat_kernel(t, r)
    half = np.linspace(0.0, lam_max, n_lambda)
    lams = np.r_[-half[:0:-1], half]
    got = spherical_transform(f, lams, rho_max=R).values[n_lambda - 1:]
    want = np.exp(-t * (9.0 + half ** 2) / 4.0)
    rel = np.abs(got - want) / want
    pl = plancherel(f, rho_max=R)
    return {
        "t": t,
        "lambda": half.tolist(),
        "transform": got.tolist(),
        "expected": want.tolist(),
        "max_relative_error": float(rel.max()),
        "plancherel": pl,
    }
