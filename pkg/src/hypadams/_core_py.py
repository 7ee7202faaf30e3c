"""NumPy implementations of the hot loops (fallback for the compiled core)."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_INNER_ORDER = 48


@lru_cache(maxsize=256)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def inner_rule(order: int = _INNER_ORDER):
    return gauss_legendre(order)


def bipolar_nodes(rho: float, t: np.ndarray, xs: np.ndarray, ws: np.ndarray):
    """Inner nodes ``s`` and weights for the bipolar convolution.

    For each outer distance ``t`` the inner variable runs over
    ``[max(t, |rho - t|), rho + t]``; the weights include
    ``sinh(s) * sqrt(Delta)`` and the Jacobian of ``s = m - h cos(psi)``.
    """
    t = np.asarray(t, dtype=float)[:, None]
    lo = np.maximum(t, np.abs(rho - t))
    hi = rho + t
    m = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    psi = 0.5 * math.pi * (xs + 1.0)
    s = m - h * np.cos(psi)
    delta = 4.0 * (np.sinh(0.5 * (t + s - rho)) * np.sinh(0.5 * (t - s + rho))
                   * np.sinh(0.5 * (s + rho + t)) * np.sinh(0.5 * (s + rho - t)))
    w = np.sinh(s) * np.sqrt(np.maximum(delta, 0.0)) * h * np.sin(psi) * (0.5 * math.pi * ws)
    return s, w


def abel_nodes(rho: float, n: int):
    """Nodes ``u`` and weights for int_0^rho q(u) sqrt(cosh rho - cosh u) du."""
    x, w = gauss_legendre(n)
    s = 0.25 * math.pi * (x + 1.0)
    u = rho * np.sin(s)
    root = np.sqrt(np.maximum(2.0 * np.sinh(0.5 * (rho + u)) * np.sinh(0.5 * (rho - u)), 0.0))
    return u, 0.25 * math.pi * w * rho * np.cos(s) * root


def abel_order(lam_max: float, rho: float) -> int:
    n = 24 + math.ceil(0.4 * lam_max * rho + 4.0 * math.sqrt(rho))
    return int(min(2000, 16 * math.ceil(n / 16)))


def spherical_table(lams: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """phi_lambda(rho) on a product grid, rows indexed by lambda."""
    lams = np.asarray(lams, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    out = np.empty((len(lams), len(rhos)))
    lam_max = float(np.max(np.abs(lams))) if len(lams) else 0.0
    for j, rho in enumerate(rhos):
        if rho == 0.0:
            out[:, j] = 1.0
            continue
        u, w = abel_nodes(rho, abel_order(lam_max, rho))
        pref = 4.0 * math.sqrt(2.0) / (math.pi * math.sinh(rho) ** 2)
        out[:, j] = pref * (np.cos(0.5 * np.outer(lams, u)) @ w)
    return out


def _all_vectors(n: int, levels: int) -> np.ndarray:
    grids = np.indices((levels,) * n).reshape(n, -1).T
    return grids.astype(float)


def oneil_bruteforce(n: int = 6, levels: int = 4):
    """Exhaustive O'Neil check on the cyclic group Z_n with counting measure.

    Returns ``(pairs, violations, min_margin)``.  Inside a cell ``(k, k+1]``
    the rearrangement of ``f*g`` is constant while the majorant is
    ``q + r/t`` with ``r >= 0``, so checking the right endpoint of each cell
    covers every real ``t``.
    """
    vecs = _all_vectors(n, levels)
    srt = -np.sort(-vecs, axis=1)
    pref = np.concatenate([np.zeros((len(vecs), 1)), np.cumsum(srt, axis=1)], axis=1)
    k1 = np.arange(1, n + 1, dtype=float)
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n  # [y, x] -> x - y
    pairs = 0
    violations = 0
    min_margin = math.inf
    for i in range(len(vecs)):
        f = vecs[i]
        M = f[idx]  # M[y, x] = f(x - y)
        h = vecs @ M
        hs = -np.sort(-h, axis=1)
        prod = srt[i][None, :] * srt
        tail = np.cumsum(prod[:, ::-1], axis=1)[:, ::-1]
        tail = np.concatenate([tail[:, 1:], np.zeros((len(vecs), 1))], axis=1)
        rhs = pref[i, 1:][None, :] * pref[:, 1:] / k1[None, :] + tail
        margin = rhs - hs
        pairs += len(vecs)
        violations += int(np.count_nonzero(margin < -1e-9))
        min_margin = min(min_margin, float(margin.min()))
    return pairs, violations, min_margin
