"""Heat, Green and half-power kernels on four-dimensional hyperbolic space.

All kernels are radial and written as integrals of the form
int_rho^inf h(r) / sqrt(cosh r - cosh rho) dr, evaluated through
:func:`hypadams.quadrature.integrate_cosh_substituted`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .geometry import RadialProfile
from .quadrature import QuadratureConfig, integrate_cosh_substituted

ALPHA_CRITICAL = -2.25
HALF_POWER_CONSTANT = 1.0 / (math.sqrt(math.pi) * (2.0 * math.pi) ** 2.5)
GREEN_CONSTANT = 1.0 / (4.0 * math.sqrt(2.0) * math.pi ** 2)
KERNEL_CFG = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-300)
_SERIES_CUT = 0.05


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    t: float | None = None
    alpha: float | None = None
    quad: QuadratureConfig = KERNEL_CFG

    def __post_init__(self):
        if self.kind == "heat":
            if self.t is None or not self.t > 0:
                raise DomainError("heat kernel needs t > 0")
        elif self.kind == "half_power":
            if self.alpha is None or self.alpha < ALPHA_CRITICAL:
                raise DomainError("half-power kernel needs alpha >= -9/4")
        elif self.kind != "green":
            raise DomainError(f"unknown kernel kind {self.kind!r}")

    @property
    def critical(self) -> bool:
        return self.kind == "half_power" and self.alpha == ALPHA_CRITICAL

    def evaluate(self, rho) -> tuple[np.ndarray, np.ndarray]:
        return evaluate_kernel(self, rho)


def _rcosh_minus_sinh_over_sinh3(r, wm1, sh):
    """(r cosh r - sinh r) / sinh^3 r without cancellation at small r."""
    out = np.empty_like(r)
    small = r < _SERIES_CUT
    rs = r[small]
    r2 = rs * rs
    num = rs ** 3 * (1.0 / 3.0 + r2 * (1.0 / 30.0 + r2 * (1.0 / 840.0 + r2 / 45360.0)))
    out[small] = num / sh[small] ** 3
    big = ~small
    out[big] = (r[big] * (wm1[big] + 1.0) - sh[big]) / sh[big] ** 3
    return out


# ------------------------------------------------------------------ heat

def _heat_one(t: float, rho: float, cfg: QuadratureConfig) -> tuple[float, float]:
    def integrand(r, wm1, sh):
        a = _rcosh_minus_sinh_over_sinh3(r, wm1, sh) / (2.0 * t)
        b = r * r / (4.0 * t * t * sh * sh)
        return (a + b) * np.exp(-r * r / (4.0 * t))

    cm1 = 2.0 * math.sinh(0.5 * rho) ** 2
    v, e = integrate_cosh_substituted(integrand, rho, cfg, scale=math.sqrt(cm1 + t), expanded=True)
    pref = (2.0 * math.pi) ** -2.5 * t ** -0.5 * math.exp(-2.25 * t)
    return pref * v, pref * e


def heat_kernel(t: float, rho, cfg: QuadratureConfig = KERNEL_CFG):
    """Heat kernel p_t(rho) of the hyperbolic Laplacian (n = 4)."""
    if not t > 0:
        raise DomainError("t must be positive")
    return _map(lambda r: _heat_one(t, r, cfg)[0], rho, allow_zero=True)


# ----------------------------------------------------------------- green

def _green_one(rho: float, cfg: QuadratureConfig) -> tuple[float, float]:
    v, e = integrate_cosh_substituted(lambda r, wm1, sh: (wm1 + 1.0) / sh ** 3, rho, cfg, expanded=True)
    return GREEN_CONSTANT * v, GREEN_CONSTANT * e


def green_kernel(rho, cfg: QuadratureConfig = KERNEL_CFG):
    """Kernel of (-Delta - 9/4)^{-1}."""
    return _map(lambda r: _green_one(r, cfg)[0], rho)


# ------------------------------------------------------------ half power

def _bessel_moments(r: np.ndarray, k: float):
    """I2 = int t^-2 e^{-k t - r^2/4t} dt and I3 = int t^-3 (...) dt."""
    if k == 0.0:
        return 4.0 / (r * r), 16.0 / r ** 4
    from scipy.special import kve

    sk = math.sqrt(k)
    z = r * sk
    damp = np.exp(-z)
    i2 = 4.0 * sk / r * kve(1, z) * damp
    i3 = 8.0 * k / (r * r) * kve(2, z) * damp
    return i2, i3


def _quadrature_moments(r: np.ndarray, k: float, step: float = 0.04):
    """Same moments by the trapezoid rule after t = t* e^x, t* = r / (2 sqrt k).

    The integrand decays like exp(-r sqrt(k) cosh x) on both sides, so the
    trapezoid rule converges geometrically in the step.
    """
    if k == 0.0:
        return 4.0 / (r * r), 16.0 / r ** 4
    shape = np.shape(r)
    r = np.ravel(r)
    sk = math.sqrt(k)
    z = r * sk
    zmin = float(np.min(z))
    X = math.acosh(1.0 + 80.0 / zmin) + 1.0
    x = np.arange(-X, X + step / 2, step)
    ts = (r / (2.0 * sk))[:, None] * np.exp(x)[None, :]
    core = np.exp(-z[:, None] * (np.cosh(x)[None, :] - 1.0))
    # factor exp(-z) pulled out of the exponent for range safety
    base = np.exp(-z)
    i2 = base * step * np.sum(ts ** -1.0 * core, axis=1)
    i3 = base * step * np.sum(ts ** -2.0 * core, axis=1)
    return i2.reshape(shape), i3.reshape(shape)


def _half_power_integrand(k: float, method: str):
    def integrand(r, wm1, sh):
        if k == 0.0:
            return 2.0 * (wm1 + 1.0) / (r * sh ** 3) + 2.0 / (r * r * sh * sh)
        moments = _bessel_moments if method == "bessel" else _quadrature_moments
        i2, i3 = moments(r, k)
        a = 0.5 * _rcosh_minus_sinh_over_sinh3(r, wm1, sh) * i2
        b = 0.25 * r * r / (sh * sh) * i3
        return a + b
    return integrand


def _half_one(alpha: float, rho: float, cfg: QuadratureConfig, method: str) -> tuple[float, float]:
    k = alpha + 2.25
    v, e = integrate_cosh_substituted(_half_power_integrand(k, method), rho, cfg, expanded=True)
    return HALF_POWER_CONSTANT * v, HALF_POWER_CONSTANT * e


class KernelMismatch(DomainError):
    """The Bessel and quadrature evaluations of a half-power kernel disagree."""


def half_power_kernel(alpha: float, rho, cfg: QuadratureConfig = KERNEL_CFG,
                      method: str = "bessel"):
    """Kernel of (-Delta + alpha)^{-1/2}, alpha >= -9/4.

    ``method`` selects how the inner time integrals are done: ``'bessel'``
    (modified Bessel functions K_1, K_2), ``'quadrature'`` (trapezoid rule in
    log time) or ``'checked'`` (both, raising :class:`KernelMismatch` if they
    differ by more than 1e-8 relative).
    """
    if alpha < ALPHA_CRITICAL:
        raise DomainError("alpha must be >= -9/4")
    if method not in ("bessel", "quadrature", "checked"):
        raise DomainError(f"unknown method {method!r}")
    if method == "checked":
        a = half_power_kernel(alpha, rho, cfg, "bessel")
        b = half_power_kernel(alpha, rho, cfg, "quadrature")
        rel = np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.abs(np.asarray(a)))
        if rel > 1e-8:
            raise KernelMismatch(f"Bessel and quadrature paths differ by {rel:.3e}")
        return a
    return _map(lambda r: _half_one(alpha, r, cfg, method)[0], rho)


def _map(fn: Callable[[float], float], rho, allow_zero: bool = False):
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0) or (not allow_zero and np.any(r <= 0)):
        raise DomainError("rho must be positive")
    out = np.array([fn(float(x)) for x in r.ravel()]).reshape(r.shape)
    return float(out) if out.ndim == 0 else out


def evaluate_kernel(spec: KernelSpec, rho) -> tuple[np.ndarray, np.ndarray]:
    """Values and quadrature error estimates on a grid."""
    r = np.atleast_1d(np.asarray(rho, dtype=float))
    if spec.kind == "heat":
        pairs = [_heat_one(spec.t, x, spec.quad) for x in r]
    elif spec.kind == "green":
        _map(lambda x: 0.0, r)
        pairs = [_green_one(x, spec.quad) for x in r]
    else:
        _map(lambda x: 0.0, r)
        pairs = [_half_one(spec.alpha, x, spec.quad, "bessel") for x in r]
    arr = np.array(pairs).reshape(len(r), 2)
    return arr[:, 0], arr[:, 1]


# ---------------------------------------------------------------- tables

class KernelTable:
    """Spline of a kernel in log rho after removing its known asymptotics.

    The splined quantity is y = log K(rho) + p log rho + q rho, which is
    nearly constant at both ends; beyond the table y is extended linearly in
    log rho.
    """

    def __init__(self, func: Callable | None, lo: float, hi: float, n: int, p: float, q: float,
                 name: str = "", *, rho=None, values=None):
        from scipy.interpolate import CubicSpline

        self.p, self.q, self.name = p, q, name
        if func is None:
            rho = np.asarray(rho, dtype=float)
            vals = np.asarray(values, dtype=float)
            self.x = np.log(rho)
        else:
            self.x = np.linspace(math.log(lo), math.log(hi), n)
            rho = np.exp(self.x)
            vals = np.asarray(func(rho), dtype=float)
        self.lo, self.hi = float(rho[0]), float(rho[-1])
        if np.any(vals <= 0):
            raise DomainError("kernel table needs positive values")
        self.y = np.log(vals) + p * self.x + q * rho
        self._spline = CubicSpline(self.x, self.y)
        self._d_lo = float(self._spline(self.x[0], 1))
        self._d_hi = float(self._spline(self.x[-1], 1))

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        x = np.log(np.maximum(r, 1e-300))
        y = np.empty_like(x)
        inside = (x >= self.x[0]) & (x <= self.x[-1])
        y[inside] = self._spline(x[inside])
        below = x < self.x[0]
        y[below] = self.y[0] + self._d_lo * (x[below] - self.x[0])
        above = x > self.x[-1]
        y[above] = self.y[-1] + self._d_hi * (x[above] - self.x[-1])
        out = np.exp(y - self.p * x - self.q * r)
        return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=16)
def kernel_table(kind: str, param: float | None = None, lo: float = 1e-4, hi: float = 80.0,
                 n: int = 800) -> KernelTable:
    """Cached spline table for ``kind`` in {'green', 'half_power'}."""
    if kind == "green":
        return KernelTable(green_kernel, lo, hi, n, 2.0, 1.5, "green")
    if kind == "half_power":
        alpha = float(param)
        k = alpha + 2.25
        return KernelTable(lambda r: half_power_kernel(alpha, r), lo, hi, n, 3.0,
                           1.5 + math.sqrt(k), f"half_power({alpha:g})")
    raise DomainError(f"no table for kind {kind!r}")


@lru_cache(maxsize=8)
def potential_kernel(alpha: float, lo: float = 0.01, hi: float = 30.0, n: int = 121) -> KernelTable:
    """Table of H_{-9/4} * H_alpha, the kernel of (-Delta - 9/4)^{-1/2} (-Delta + alpha)^{-1/2}.

    Computed by bipolar convolution on [lo, hi].  Below ``lo`` the difference
    from the Green kernel, which grows like a + b log rho, is extrapolated
    from the first grid points.
    """
    from .geometry import convolve_radial

    h = kernel_table("half_power", ALPHA_CRITICAL)
    ha = kernel_table("half_power", float(alpha))
    g = kernel_table("green")
    rho = np.geomspace(lo, hi, n)
    vals = convolve_radial(h, ha, rho).values
    head = rho[:6]
    a, b = np.polynomial.polynomial.polyfit(np.log(head), g(head) - vals[:6], 1)
    small = np.geomspace(1e-4, lo, 13)[:-1]
    small_vals = g(small) - (a + b * np.log(small))
    return KernelTable(None, 0, 0, 0, 2.0, 1.5, f"potential({alpha:g})",
                       rho=np.concatenate([small, rho]), values=np.concatenate([small_vals, vals]))


def kernel_profile(kind: str, param: float | None = None, rho_grid=None) -> RadialProfile:
    """RadialProfile wrapping a cached kernel table (nonincreasing).

    ``kind`` is 'green', 'half_power' or 'potential'.
    """
    tab = potential_kernel(float(param)) if kind == "potential" else kernel_table(kind, param)
    grid = np.geomspace(1e-3, 20.0, 200) if rho_grid is None else np.asarray(rho_grid, dtype=float)
    return RadialProfile(grid, tab(grid), monotone_flag="nonincreasing", func=tab, name=tab.name)


# ----------------------------------------------------------- bound checks

@dataclass
class BoundReport:
    name: str
    rho_grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    rel_tol: float = 1e-9
    abs_tol: float = 0.0
    fitted_constant: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rho_grid = np.atleast_1d(np.asarray(self.rho_grid, dtype=float))
        self.lhs = np.atleast_1d(np.asarray(self.lhs, dtype=float))
        self.rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def passed(self) -> np.ndarray:
        return self.margin >= -(self.abs_tol + self.rel_tol * np.abs(self.rhs))

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.passed)) and bool(self.extras.get("ok", True))

    def rows(self):
        for x, l, r, m, p in zip(self.rho_grid, self.lhs, self.rhs, self.margin, self.passed):
            yield {"x": float(x), "lhs": float(l), "rhs": float(r), "margin": float(m), "pass": bool(p)}

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.all_pass,
            "fitted_constant": self.fitted_constant,
            "extras": {k: _jsonable(v) for k, v in sorted(self.extras.items())},
            "rows": list(self.rows()),
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def fitted_constant(lhs: np.ndarray, shape: np.ndarray) -> float:
    """Smallest C with lhs <= C * shape on the grid."""
    return float(np.max(np.asarray(lhs) / np.asarray(shape)))


def lemma31_rhs(rho):
    rho = np.asarray(rho, dtype=float)
    c = 4.0 * math.pi ** 2 * np.cosh(0.5 * rho)
    return 1.0 / (c * np.sinh(rho) ** 2) + 1.0 / (c * np.sinh(rho))


def lemma32_rhs_first(rho):
    rho = np.asarray(rho, dtype=float)
    ch = np.cosh(rho)
    return (1.0 / (16.0 * math.pi ** 2 * (1.0 + ch) * np.sinh(0.5 * rho) ** 3)
            + math.sqrt(2.0) / (4.0 * math.pi ** 2 * np.sqrt(1.0 + ch) * np.sinh(rho)))


def lemma32_rhs_second(rho):
    rho = np.asarray(rho, dtype=float)
    cm1 = 2.0 * np.sinh(0.5 * rho) ** 2
    return 8.0 * HALF_POWER_CONSTANT / (rho * np.sqrt(cm1 + 2.0) * cm1)


def corollary33_rhs(rho):
    rho = np.asarray(rho, dtype=float)
    ch = np.cosh(rho)
    return (1.0 / (4.0 * math.pi ** 2 * np.sinh(rho) ** 3)
            + (1.0 / (8.0 * math.pi ** 2 * ch * np.cosh(0.5 * rho))
               + math.sqrt(2.0) / (4.0 * math.pi ** 2 * np.sqrt(1.0 + ch))) / np.sinh(rho))


def default_eps0(alpha: float) -> tuple[float, float]:
    """(eps0, alpha0) with alpha0 = sqrt((alpha + 9/4)(1 - eps0)) - 3/2 at half its supremum."""
    k = alpha + 2.25
    sup = math.sqrt(k) - 1.5
    if sup <= 0:
        raise DomainError("alpha0 > 0 requires alpha > 0")
    a0 = 0.5 * sup
    return 1.0 - (1.5 + a0) ** 2 / k, a0


def alpha0_of(alpha: float, eps0: float) -> float:
    return math.sqrt((alpha + 2.25) * (1.0 - eps0)) - 1.5


def decay_slope(alpha: float, lo: float = 3.0, hi: float = 10.0, n: int = 57) -> float:
    """Least-squares slope of log half_power_kernel(alpha, rho) on [lo, hi]."""
    rho = np.linspace(lo, hi, n)
    vals = half_power_kernel(alpha, rho)
    return float(np.polyfit(rho, np.log(vals), 1)[0])


def default_rho_grid(n: int = 200) -> np.ndarray:
    return np.geomspace(0.01, 12.0, n)


def verify_section3(rho_grid=None, alphas: Sequence[float] = (0.25, 1.0, 4.0),
                    eps0: float | None = None, slope_alpha: float = 1.0) -> list[BoundReport]:
    """Check every pointwise kernel bound on ``rho_grid``; one report per bound."""
    rho = default_rho_grid() if rho_grid is None else np.atleast_1d(np.asarray(rho_grid, dtype=float))
    reports: list[BoundReport] = []
    if len(rho) == 0:
        return reports
    g = green_kernel(rho)
    h = np.atleast_1d(half_power_kernel(ALPHA_CRITICAL, rho))
    g = np.atleast_1d(g)
    reports.append(BoundReport("lemma3.1", rho, g, lemma31_rhs(rho)))
    reports.append(BoundReport("lemma3.2.first", rho, h, lemma32_rhs_first(rho)))
    reports.append(BoundReport("lemma3.2.second", rho, h, lemma32_rhs_second(rho)))
    reports.append(BoundReport("corollary3.3.first", rho, h, corollary33_rhs(rho)))

    far = rho > 1.0
    if np.any(far):
        shape = rho[far] ** -1 * np.exp(-1.5 * rho[far])
        c = fitted_constant(h[far], shape)
        fine = np.geomspace(float(rho[far].min()), float(rho[far].max()), 2 * int(far.sum()) - 1)
        c_fine = fitted_constant(half_power_kernel(ALPHA_CRITICAL, fine), fine ** -1 * np.exp(-1.5 * fine))
        stable = abs(c_fine - c) <= 0.1 * c
        reports.append(BoundReport("corollary3.3.decay", rho[far], h[far], c * shape,
                                   fitted_constant=c,
                                   extras={"fitted_constant_refined": c_fine, "ok": bool(stable)}))

    for a in alphas:
        ha = np.atleast_1d(half_power_kernel(a, rho))
        reports.append(BoundReport(f"domination3.2[alpha={a:g}]", rho, ha, h))

    e0, a0 = default_eps0(slope_alpha) if eps0 is None else (eps0, alpha0_of(slope_alpha, eps0))
    slope = decay_slope(slope_alpha, 2.0, 10.0)
    threshold = -(3.0 + a0)
    reports.append(BoundReport(
        f"lemma3.4[alpha={slope_alpha:g}]", np.array([a0]), np.array([slope]), np.array([threshold]),
        rel_tol=0.0,
        extras={"eps0": e0, "alpha0": a0, "fitted_slope": slope, "fit_range": [2.0, 10.0],
                "ok": bool(a0 > 0)}))
    # the same decay on a later window against a halved exponent gain
    slope3 = decay_slope(slope_alpha, 3.0, 10.0)
    reports.append(BoundReport(
        f"lemma3.4.late[alpha={slope_alpha:g}]", np.array([a0]), np.array([slope3]),
        np.array([-3.0 - 0.5 * a0]), rel_tol=0.0,
        extras={"eps0": e0, "alpha0": a0, "fitted_slope": slope3, "fit_range": [3.0, 10.0],
                "ok": bool(a0 > 0)}))
    return reports


def write_kernel_csv(path, rho, values, errors) -> None:
    """CSV with columns rho, value, err_estimate at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho", "value", "err_estimate"])
        for r, v, e in zip(rho, values, errors):
            w.writerow([f"{r:.17g}", f"{v:.17g}", f"{e:.17g}"])
