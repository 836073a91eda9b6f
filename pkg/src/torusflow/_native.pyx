# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_fallback.py``.

Each output row depends only on its own target and is accumulated in a
fixed source order, so results do not depend on the thread count.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport sqrt, pow, exp, cos, sin, M_PI, expm1


cdef double _rademacher_one(const double complex[:, ::1] x, const double[:, ::1] signs,
                            double p) noexcept nogil:
    cdef Py_ssize_t S = signs.shape[0], m = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t s, k, c
    cdef double acc = 0.0, nrm2, re, im
    for s in range(S):
        nrm2 = 0.0
        for c in range(d):
            re = 0.0
            im = 0.0
            for k in range(m):
                re = re + signs[s, k] * x[k, c].real
                im = im + signs[s, k] * x[k, c].imag
            nrm2 = nrm2 + re * re + im * im
        if p == 2.0:
            acc = acc + nrm2
        else:
            acc = acc + pow(nrm2, 0.5 * p)
    return pow(acc / S, 1.0 / p)


def rademacher_norms(const double complex[:, :, ::1] X, const double[:, ::1] signs, double p,
                     int num_threads=1):
    cdef Py_ssize_t B = X.shape[0], b
    out = np.empty(B, dtype=np.float64)
    cdef double[::1] o = out
    for b in prange(B, nogil=True, num_threads=num_threads, schedule="static"):
        o[b] = _rademacher_one(X[b], signs, p)
    return out


cdef void _stokes_one(const double[::1] x, const double[:, ::1] sources, const double[:, ::1] forces,
                      double mu, double exclude_radius, double[::1] u, double[:, ::1] g,
                      double* p) noexcept nogil:
    cdef Py_ssize_t S = sources.shape[0], s, i, m
    cdef double dx[3]
    cdef double f[3]
    cdef double r2, r, ir, ir3, ir5, xf
    cdef double cu = -1.0 / (8.0 * M_PI * mu)
    cdef double cp = 1.0 / (4.0 * M_PI)
    for s in range(S):
        r2 = 0.0
        for i in range(3):
            dx[i] = x[i] - sources[s, i]
            r2 = r2 + dx[i] * dx[i]
        r = sqrt(r2)
        if r <= exclude_radius:
            continue
        ir = 1.0 / r
        ir3 = ir * ir * ir
        ir5 = ir3 * ir * ir
        xf = 0.0
        for i in range(3):
            f[i] = forces[s, i]
            xf = xf + dx[i] * f[i]
        for i in range(3):
            u[i] += cu * (f[i] * ir + dx[i] * xf * ir3)
            for m in range(3):
                g[i, m] += cu * (-f[i] * dx[m] * ir3 + dx[i] * f[m] * ir3
                                 - 3.0 * dx[i] * dx[m] * xf * ir5)
            g[i, i] += cu * xf * ir3
        p[0] += cp * xf * ir3


def stokeslet_sum(const double[:, ::1] targets, const double[:, ::1] sources,
                  const double[:, ::1] forces, double mu, double exclude_radius=0.0,
                  int num_threads=1):
    cdef Py_ssize_t M = targets.shape[0], t
    u_arr = np.zeros((M, 3))
    g_arr = np.zeros((M, 3, 3))
    p_arr = np.zeros(M)
    cdef double[:, ::1] u = u_arr
    cdef double[:, :, ::1] g = g_arr
    cdef double[::1] p = p_arr
    for t in prange(M, nogil=True, num_threads=num_threads, schedule="static"):
        _stokes_one(targets[t], sources, forces, mu, exclude_radius, u[t], g[t], &p[t])
    return u_arr, g_arr, p_arr


cdef inline double complex _cexp(double complex z) noexcept nogil:
    cdef double a = exp(z.real)
    return a * cos(z.imag) + 1j * a * sin(z.imag)


cdef inline double complex _one_minus_exp_neg(double complex z) noexcept nogil:
    # 1 - exp(-z), accurate when |z| is small
    cdef double a = -z.real
    cdef double b = -z.imag
    return -(expm1(a) * cos(b) + (cos(b) - 1.0)) - 1j * exp(a) * sin(b)


cdef void _osc_one(const double[::1] x, const double[:, ::1] sources, double complex kap,
                   double complex lam, double mu, const double complex[:, ::1] h,
                   const double complex[:, :, ::1] gsrc, bint use_h, bint use_g,
                   double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t S = sources.shape[0], s, i, j, m
    cdef double dx[3]
    cdef double e[3]
    cdef double r, r2
    cdef double complex E, om, c, gg, dg, h1, h2, h3, A, Bc, dA, Ar, Gij, dG
    cdef double complex acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, term
    c = 1.0 / (4.0 * M_PI * lam)
    for s in range(S):
        r2 = 0.0
        for i in range(3):
            dx[i] = x[i] - sources[s, i]
            r2 = r2 + dx[i] * dx[i]
        r = sqrt(r2)
        for i in range(3):
            e[i] = dx[i] / r
        E = _cexp(-kap * r)
        om = _one_minus_exp_neg(kap * r)
        gg = E / (4.0 * M_PI * mu * r)
        dg = -E * (kap * r + 1.0) / (4.0 * M_PI * mu * r * r)
        h1 = c * (kap * E / r - om / (r * r))
        h2 = c * (-kap * kap * E / r - 2.0 * kap * E / (r * r) + 2.0 * om / (r * r * r))
        h3 = c * (kap * kap * kap * E / r + 3.0 * kap * kap * E / (r * r)
                  + 6.0 * kap * E / (r * r * r) - 6.0 * om / (r * r * r * r))
        A = h2 - h1 / r
        Bc = h1 / r
        dA = h3 - h2 / r + h1 / (r * r)
        Ar = A / r
        for i in range(3):
            term = 0.0
            if use_h:
                for j in range(3):
                    Gij = A * e[i] * e[j]
                    if i == j:
                        Gij = Gij + gg + Bc
                    term = term + Gij * h[s, j]
            if use_g:
                for j in range(3):
                    for m in range(3):
                        dG = (dA - 2.0 * Ar) * e[i] * e[j] * e[m]
                        if i == j:
                            dG = dG + (dg + Ar) * e[m]
                        if i == m:
                            dG = dG + Ar * e[j]
                        if j == m:
                            dG = dG + Ar * e[i]
                        term = term + dG * gsrc[s, j, m]
            if i == 0:
                acc0 = acc0 + term
            elif i == 1:
                acc1 = acc1 + term
            else:
                acc2 = acc2 + term
    out[0] = acc0
    out[1] = acc1
    out[2] = acc2


def oscillatory_sum(const double[:, ::1] targets, const double[:, ::1] sources, modes, double mu,
                    const double complex[:, :, ::1] h_src, const double complex[:, :, :, ::1] g_src,
                    bint use_h, bint use_g, int num_threads=1):
    cdef Py_ssize_t M = targets.shape[0], K = len(modes), t, q
    mode_arr = np.asarray(modes, dtype=np.float64)
    cdef double complex[::1] kaps = np.sqrt(1j * mode_arr / mu + 0j)
    cdef double complex[::1] lams = 1j * mode_arr + 0j
    out = np.zeros((K, M, 3), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    for t in prange(M, nogil=True, num_threads=num_threads, schedule="static"):
        for q in range(K):
            _osc_one(targets[t], sources, kaps[q], lams[q], mu, h_src[q], g_src[q],
                     use_h, use_g, o[q, t])
    return out
