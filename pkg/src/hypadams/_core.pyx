# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; results match :mod:`hypadams._core_py`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, sinh, sqrt, fabs, M_PI, INFINITY

cnp.import_array()

from ._core_py import inner_rule, abel_order, gauss_legendre


cdef inline double _sh(double e, double x) nogil:
    # sinh(x) given e = exp(x); the difference form cancels for small x
    if fabs(x) < 0.5:
        return sinh(x)
    return 0.5 * (e - 1.0 / e)


def bipolar_nodes(double rho, t_in, const double[::1] xs, const double[::1] ws):
    cdef const double[::1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0], m = xs.shape[0], i, j
    s_arr = np.empty((n, m))
    w_arr = np.empty((n, m))
    cdef double[:, ::1] s = s_arr
    cdef double[:, ::1] w = w_arr
    cdef double[::1] cpsi = np.empty(m), wpsi = np.empty(m)
    cdef double ti, lo, hi, mid, h, psi, sj, delta, es, ea, eb, ec, ed, ert, et
    for j in range(m):
        psi = 0.5 * M_PI * (xs[j] + 1.0)
        cpsi[j] = cos(psi)
        wpsi[j] = sin(psi) * (0.5 * M_PI * ws[j])
    ert = exp(0.5 * rho)
    for i in range(n):
        ti = t[i]
        lo = fabs(rho - ti)
        if ti > lo:
            lo = ti
        hi = rho + ti
        mid = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        et = exp(0.5 * ti)
        for j in range(m):
            sj = mid - h * cpsi[j]
            es = exp(0.5 * sj)
            # sinh of the four half-perimeter combinations from shared exponentials
            ea = et * es / ert
            eb = et * ert / es
            ec = es * ert * et
            ed = es * ert / et
            delta = 4.0 * (_sh(ea, 0.5 * (ti + sj - rho)) * _sh(eb, 0.5 * (ti - sj + rho))
                           * _sh(ec, 0.5 * (sj + rho + ti)) * _sh(ed, 0.5 * (sj + rho - ti)))
            if delta < 0.0:
                delta = 0.0
            s[i, j] = sj
            w[i, j] = _sh(es * es, sj) * sqrt(delta) * h * wpsi[j]
    return s_arr, w_arr


def spherical_table(lams_in, rhos_in):
    cdef const double[::1] lams = np.ascontiguousarray(lams_in, dtype=np.float64)
    cdef const double[::1] rhos = np.ascontiguousarray(rhos_in, dtype=np.float64)
    cdef Py_ssize_t nl = lams.shape[0], nr = rhos.shape[0], i, j, k, n
    out_arr = np.empty((nl, nr))
    cdef double[:, ::1] out = out_arr
    cdef double lam_max = 0.0, rho, pref, acc, sk, u, root
    cdef const double[::1] x, wq
    cdef double[::1] us, wu
    cdef double dl = 0.0, c0
    cdef bint uniform = nl > 2
    for i in range(nl):
        if fabs(lams[i]) > lam_max:
            lam_max = fabs(lams[i])
    if uniform:
        dl = (lams[nl - 1] - lams[0]) / (nl - 1)
        for i in range(nl):
            if fabs(lams[i] - (lams[0] + i * dl)) > 1e-12 * (1.0 + lam_max):
                uniform = False
                break
    cdef Py_ssize_t nmax = abel_order(lam_max, rhos[nr - 1]) if nr > 0 else 1
    for j in range(nr):
        if abel_order(lam_max, rhos[j]) > nmax:
            nmax = abel_order(lam_max, rhos[j])
    cdef double[::1] cur_c = np.empty(nmax), cur_s = np.empty(nmax)
    cdef double[::1] rot_c = np.empty(nmax), rot_s = np.empty(nmax)
    for j in range(nr):
        rho = rhos[j]
        if rho == 0.0:
            for i in range(nl):
                out[i, j] = 1.0
            continue
        n = abel_order(lam_max, rho)
        xg, wg = gauss_legendre(n)
        x = xg
        wq = wg
        us = np.empty(n)
        wu = np.empty(n)
        for k in range(n):
            sk = 0.25 * M_PI * (x[k] + 1.0)
            u = rho * sin(sk)
            root = 2.0 * sinh(0.5 * (rho + u)) * sinh(0.5 * (rho - u))
            root = sqrt(root) if root > 0.0 else 0.0
            us[k] = 0.5 * u
            wu[k] = 0.25 * M_PI * wq[k] * rho * cos(sk) * root
        pref = 4.0 * sqrt(2.0) / (M_PI * sinh(rho) ** 2)
        if uniform:
            # rotate exp(i lambda u/2) along the lambda grid instead of calling cos
            for k in range(n):
                cur_c[k] = cos(lams[0] * us[k])
                cur_s[k] = sin(lams[0] * us[k])
                rot_c[k] = cos(dl * us[k])
                rot_s[k] = sin(dl * us[k])
            for i in range(nl):
                acc = 0.0
                for k in range(n):
                    acc += cur_c[k] * wu[k]
                    c0 = cur_c[k]
                    cur_c[k] = c0 * rot_c[k] - cur_s[k] * rot_s[k]
                    cur_s[k] = c0 * rot_s[k] + cur_s[k] * rot_c[k]
                out[i, j] = pref * acc
        else:
            for i in range(nl):
                acc = 0.0
                for k in range(n):
                    acc += cos(lams[i] * us[k]) * wu[k]
                out[i, j] = pref * acc
    return out_arr


def oneil_bruteforce(int n=6, int levels=4):
    cdef Py_ssize_t total = 1, a, b, x, y, k, kk, c
    cdef int i
    if n > 64:
        raise ValueError("at most 64 cells supported")
    for i in range(n):
        total *= levels
    vec_arr = np.empty((total, n))
    srt_arr = np.empty((total, n))
    pre_arr = np.zeros((total, n + 1))
    cdef double[:, ::1] vec = vec_arr
    cdef double[:, ::1] srt = srt_arr
    cdef double[:, ::1] pre = pre_arr
    for a in range(total):
        c = a
        for x in range(n - 1, -1, -1):
            vec[a, x] = c % levels
            c //= levels
    srt_arr[:] = -np.sort(-vec_arr, axis=1)
    for a in range(total):
        for k in range(n):
            pre[a, k + 1] = pre[a, k] + srt[a, k]
    cdef double h[64]
    cdef double tail[65]
    cdef double tmp, rhs, margin, min_margin = INFINITY
    cdef Py_ssize_t violations = 0
    for a in range(total):
        for b in range(total):
            for x in range(n):
                tmp = 0.0
                for y in range(n):
                    tmp += vec[a, (x - y + n) % n] * vec[b, y]
                h[x] = tmp
            # insertion sort, descending
            for x in range(1, n):
                tmp = h[x]
                y = x - 1
                while y >= 0 and h[y] < tmp:
                    h[y + 1] = h[y]
                    y -= 1
                h[y + 1] = tmp
            tail[n] = 0.0
            for k in range(n - 1, -1, -1):
                tail[k] = tail[k + 1] + srt[a, k] * srt[b, k]
            for k in range(n):
                kk = k + 1
                rhs = pre[a, kk] * pre[b, kk] / kk + tail[kk]
                margin = rhs - h[k]
                if margin < min_margin:
                    min_margin = margin
                if margin < -1e-9:
                    violations += 1
    return total * total, violations, min_margin
