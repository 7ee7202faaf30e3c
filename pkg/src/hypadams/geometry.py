"""Poincare-ball model of four-dimensional hyperbolic space."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import DomainError, NonConvergent, NotMonotone
from .quadrature import DEFAULT, QuadratureConfig, integrate

SPHERE_AREA = 2.0 * math.pi ** 2  # |S^3|
BOUNDARY_CAP = 1.0 - 1e-12


@dataclass(frozen=True)
class Point4:
    """A point of the open unit ball in R^4."""

    coords: tuple

    def __init__(self, coords: Sequence[float]):
        c = tuple(float(v) for v in coords)
        if len(c) != 4:
            raise DomainError("a Point4 needs exactly four coordinates")
        n = math.hypot(*c)
        if not n <= BOUNDARY_CAP:
            raise DomainError(f"|x| = {n} is not inside the ball")
        object.__setattr__(self, "coords", c)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def norm(self) -> float:
        return math.hypot(*self.coords)


def rho_of_norm(r):
    """Geodesic distance to the origin for Euclidean radius ``r``."""
    r = np.asarray(r, dtype=float)
    return 2.0 * np.arctanh(r)


def norm_of_rho(rho):
    return np.tanh(0.5 * np.asarray(rho, dtype=float))


def rho_of_point(x: Point4) -> float:
    """Return log((1+|x|)/(1-|x|))."""
    return float(rho_of_norm(x.norm))


def _mobius_array(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    aa = a @ a
    xa = x @ a
    d = x - a
    num = (d @ d) * a - (1.0 - aa) * d
    den = 1.0 - 2.0 * xa + (x @ x) * aa
    return num / den


def mobius(a: Point4, x: Point4) -> Point4:
    """The ball automorphism T_a, which sends ``a`` to the origin."""
    y = _mobius_array(a.array, x.array)
    n = float(np.linalg.norm(y))
    if n > BOUNDARY_CAP:
        y = y * (BOUNDARY_CAP / n)
    return Point4(y)


def geodesic_distance(x: Point4, y: Point4) -> float:
    """Distance rho(T_x(y)), evaluated without the boundary clamp."""
    z = _mobius_array(x.array, y.array)
    return float(rho_of_norm(min(float(np.linalg.norm(z)), 1.0 - 1e-17)))


def geodesic_distance_closed(x: Point4, y: Point4) -> float:
    """acosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))."""
    d = x.array - y.array
    q = 2.0 * (d @ d) / ((1.0 - x.array @ x.array) * (1.0 - y.array @ y.array))
    # acosh(1+q) = log1p(q + sqrt(q(q+2)))
    return float(np.log1p(q + math.sqrt(q * (q + 2.0))))


def ball_volume(rho):
    """Hyperbolic volume of the geodesic ball of radius ``rho``.

    Equal to 2 pi^2 (cosh^3/3 - cosh + 2/3); written through
    ``y = cosh(rho) - 1`` as 2 pi^2 y^2 (y + 3) / 3 to avoid cancellation.
    """
    rho = np.asarray(rho, dtype=float)
    y = 2.0 * np.sinh(0.5 * rho) ** 2
    out = SPHERE_AREA * y * y * (y + 3.0) / 3.0
    return float(out) if out.ndim == 0 else out


def ball_volume_derivative(rho):
    return SPHERE_AREA * np.sinh(np.asarray(rho, dtype=float)) ** 3


def ball_volume_inverse(t):
    """Radius whose ball has volume ``t`` (vectorized)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("volume must be nonnegative")
    c = 3.0 * t / SPHERE_AREA  # solve y^2 (y + 3) = c for y >= 0
    y = np.where(c < 1.0, np.sqrt(c / 3.0), np.cbrt(c))
    for _ in range(60):
        f = y * y * (y + 3.0) - c
        fp = 3.0 * y * y + 6.0 * y
        step = np.where(fp > 0, f / np.where(fp > 0, fp, 1.0), 0.0)
        y = np.maximum(y - step, 0.0)
        if np.all(np.abs(step) <= 1e-16 * np.maximum(y, 1e-300)):
            break
    out = 2.0 * np.arcsinh(np.sqrt(0.5 * y))
    return float(out) if out.ndim == 0 else out


def volume_bound_sinh(rho):
    return 0.5 * math.pi ** 2 * np.sinh(np.asarray(rho, dtype=float)) ** 4


def volume_bound_exp(rho):
    return (2.0 * math.pi ** 2 / 3.0) * np.exp(3.0 * np.asarray(rho, dtype=float))


@dataclass
class RadialProfile:
    """A radial function f(rho) given on a grid, optionally with a closed form.

    Outside the grid the profile is zero unless ``func`` is supplied, in which
    case ``func`` is used everywhere.
    """

    rho_grid: np.ndarray
    values: np.ndarray
    interpolation_order: str = "cubic"
    monotone_flag: str = "unknown"
    func: Callable | None = None
    name: str = ""
    _spline: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.rho_grid = np.asarray(self.rho_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.rho_grid.ndim != 1 or self.rho_grid.shape != self.values.shape:
            raise DomainError("grid and values must be 1-d arrays of equal length")
        if len(self.rho_grid) and self.rho_grid[0] < 0:
            raise DomainError("radii must be nonnegative")
        if np.any(np.diff(self.rho_grid) <= 0):
            raise DomainError("rho_grid must be strictly increasing")
        if self.interpolation_order not in ("cubic", "linear"):
            raise DomainError("interpolation_order must be 'cubic' or 'linear'")
        if self.monotone_flag not in ("unknown", "nonincreasing"):
            raise DomainError("monotone_flag must be 'unknown' or 'nonincreasing'")
        if self.monotone_flag == "nonincreasing" and np.any(np.diff(self.values) > 0):
            raise NotMonotone("values increase somewhere on the grid")

    @classmethod
    def from_function(cls, func: Callable, rho_grid, **kw) -> "RadialProfile":
        grid = np.asarray(rho_grid, dtype=float)
        return cls(grid, np.asarray(func(grid), dtype=float), func=func, **kw)

    @property
    def effective_order(self) -> str:
        # cubic interpolation may overshoot and break monotonicity
        return "linear" if self.monotone_flag == "nonincreasing" else self.interpolation_order

    def _interp(self, rho: np.ndarray) -> np.ndarray:
        g, v = self.rho_grid, self.values
        inside = (rho >= g[0]) & (rho <= g[-1])
        out = np.zeros_like(rho)
        if len(g) < 4 or self.effective_order == "linear":
            out[inside] = np.interp(rho[inside], g, v)
            return out
        if self._spline is None:
            from scipy.interpolate import CubicSpline
            self._spline = CubicSpline(g, v)
        out[inside] = self._spline(rho[inside])
        return out

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        out = self.func(r) if self.func is not None else self._interp(np.atleast_1d(r)).reshape(r.shape)
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    @property
    def support_radius(self) -> float:
        return math.inf if self.func is not None else float(self.rho_grid[-1])


def radial_integral(f, cfg: QuadratureConfig = DEFAULT, *, rho_max: float | None = None,
                    breakpoints=()) -> tuple[float, float]:
    """Integral of a radial function against dV = 2 pi^2 sinh^3 rho d rho.

    For profiles defined everywhere the range is truncated once
    ``|f| sinh^3`` falls below ``rel_tol`` times the running integral; the
    tail is bounded assuming the observed exponential decay continues.
    """
    fv = f if callable(f) else None
    if fv is None:
        raise DomainError("radial_integral needs a callable or RadialProfile")

    def w(r):
        return SPHERE_AREA * np.asarray(fv(r), dtype=float) * np.sinh(r) ** 3

    if isinstance(f, RadialProfile) and f.func is None:
        bps = tuple(b for b in breakpoints if b < f.rho_grid[-1]) + tuple(f.rho_grid[1:-1][::8])
        return integrate(w, 0.0, float(f.rho_grid[-1]), cfg, bps)
    if rho_max is not None:
        return integrate(w, 0.0, float(rho_max), cfg, breakpoints)

    total, err, a = 0.0, 0.0, 0.0
    step = 2.0
    prev_edge = None
    while a < 200.0:
        v, e = integrate(w, a, a + step, cfg, breakpoints)
        total += v
        err += e
        a += step
        edge = abs(float(w(np.array([a]))[0]))
        if prev_edge is not None and edge < prev_edge and edge > 0:
            rate = math.log(prev_edge / edge) / step
            tail = edge / rate
            if tail < cfg.rel_tol * abs(total) + cfg.abs_tol:
                return total, err + tail
        elif edge == 0.0 and prev_edge == 0.0:
            return total, err
        prev_edge = edge
    raise NonConvergent("radial integrand shows no exponential decay up to rho = 200")


def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def convolve_radial(f, g, rho_out, *, method: str = "bipolar", order: int = 64,
                    cfg: QuadratureConfig | None = None, tail: str = "auto",
                    outer_limit: float = 60.0) -> RadialProfile:
    """Hyperbolic convolution of two radial functions.

    ``method='angular'`` integrates over the radius of y and the polar angle
    between x and y with an ``order``-point Gauss-Legendre rule carrying the
    sin^2 weight of the three-sphere; suitable for smooth, rapidly decaying
    profiles.  ``method='bipolar'`` changes variables to the two distances
    (|y|, d(x, y)), which handles kernels singular at the origin; see
    :func:`_bipolar_point`.
    """
    rho_out = np.atleast_1d(np.asarray(rho_out, dtype=float))
    cfg = cfg or QuadratureConfig(rel_tol=1e-10, abs_tol=1e-300)
    if method == "angular":
        vals = np.array([_angular_point(f, g, r, order, cfg) for r in rho_out])
    elif method == "bipolar":
        vals = np.array([_bipolar_point(f, g, r, cfg, tail, outer_limit) for r in rho_out])
    else:
        raise DomainError(f"unknown convolution method {method!r}")
    return RadialProfile(rho_out, vals, name="convolution")


def _angular_point(f, g, rho: float, order: int, cfg: QuadratureConfig) -> float:
    th, wt = _gl(order)
    th = 0.5 * math.pi * (th + 1.0)
    wt = 0.5 * math.pi * wt * np.sin(th) ** 2 * (2.0 / math.pi)
    cr, sr = math.cosh(rho), math.sinh(rho)
    cth = np.cos(th)

    def radial(s: np.ndarray) -> np.ndarray:
        # cosh d = cosh rho cosh s - sinh rho sinh s cos theta
        ch = cr * np.cosh(s)[..., None] - sr * np.sinh(s)[..., None] * cth
        d = np.arccosh(np.maximum(ch, 1.0))
        avg = (np.asarray(g(d), dtype=float) * wt).sum(-1)
        return SPHERE_AREA * np.asarray(f(s), dtype=float) * avg * np.sinh(s) ** 3

    reach = getattr(f, "support_radius", math.inf)
    hi = min(reach, rho + 40.0) if math.isfinite(reach) else rho + 40.0
    bps = [p for p in (rho,) if 0 < p < hi]
    v, _ = integrate(radial, 0.0, hi, cfg, bps)
    return v


def _bipolar_point(f, g, rho: float, cfg: QuadratureConfig, tail: str,
                   outer_limit: float) -> float:
    """Convolution at radius ``rho`` in bipolar coordinates.

    With s = |y| and d = d(x, y), (f*g)(rho) equals
    4 pi / sinh^2 rho times the integral of f(s) sinh s g(d) sinh d sqrt(Delta)
    over the triangle |rho - s| <= d <= rho + s.  The region is split along
    s = d and each half is integrated as an outer variable with an inner
    Gauss-Legendre sum in an angle that absorbs the square-root edges.
    """
    if rho <= 0:
        raise DomainError("bipolar convolution needs rho > 0")
    xs, ws = _backend.inner_rule()

    def outer(a, b):
        # integrand in the outer distance; inner variable ranges over [max(t, |rho-t|), rho+t]
        def h(t):
            t = np.asarray(t, dtype=float)
            s_nodes, w_nodes = _backend.bipolar_nodes(rho, t.ravel(), xs, ws)
            inner_fg = (np.asarray(a(s_nodes), dtype=float) * w_nodes).sum(-1)
            return (np.asarray(b(t.ravel()), dtype=float) * np.sinh(t.ravel()) * inner_fg).reshape(t.shape)
        return h

    h1 = outer(f, g)  # outer d, inner s >= d
    h2 = outer(g, f)  # outer s, inner d > s
    D = float(outer_limit) + rho
    pts = sorted({0.0, 0.5 * rho, rho, 2.0 * rho, rho + 2.0, rho + 6.0, D})
    pts = [p for p in pts if p <= D]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += integrate(lambda t: h1(t) + h2(t), lo, hi, cfg)[0]
    if tail == "auto":
        ds = np.linspace(0.5 * D, D, 24)
        ys = h1(ds) + h2(ds)
        M = np.stack([ds ** -2, ds ** -3, ds ** -4], 1)
        co, *_ = np.linalg.lstsq(M, ys, rcond=None)
        total += co[0] / D + co[1] / (2 * D * D) + co[2] / (3 * D ** 3)
    return 4.0 * math.pi / math.sinh(rho) ** 2 * total
