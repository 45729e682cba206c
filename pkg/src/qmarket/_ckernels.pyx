# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shift-stencil kernels (see _kernels_py for the reference version).

The state is copied into a buffer padded by two cells on every side: zeros
for the hard wall, wrapped copies for periodic boundaries. The stencil then
runs without bounds checks. Complex arithmetic is spelled out on real and
imaginary parts.
"""

import numpy as np

DEF PAD = 2


cdef void _fill_pad(const double[:, :, ::1] r, double[:, :, ::1] p, Py_ssize_t n, bint periodic) noexcept nogil:
    cdef Py_ssize_t i, j, si, sj
    cdef Py_ssize_t m = n + 2 * PAD
    for i in range(m):
        si = i - PAD
        for j in range(m):
            sj = j - PAD
            if periodic:
                si = (i - PAD + n) % n
                sj = (j - PAD + n) % n
                p[i, j, 0] = r[si, sj, 0]
                p[i, j, 1] = r[si, sj, 1]
            elif 0 <= si < n and 0 <= sj < n:
                p[i, j, 0] = r[si, sj, 0]
                p[i, j, 1] = r[si, sj, 1]
            else:
                p[i, j, 0] = 0.0
                p[i, j, 1] = 0.0


cdef void _generator(const double[:, :, ::1] p, double[:, :, ::1] out, Py_ssize_t n,
                     double s2r, double s2i, double nur, double nui, double ndr, double ndi,
                     bint periodic) noexcept nogil:
    cdef Py_ssize_t i, j, a, b
    cdef double ki, kj, h, sr, si, ur, ui, dr, di
    cdef bint has_u = nur != 0.0 or nui != 0.0
    cdef bint has_d = ndr != 0.0 or ndi != 0.0
    for i in range(n):
        a = i + PAD
        ki = 2.0
        if not periodic and (i == 0 or i == n - 1):
            ki = 1.0
        for j in range(n):
            b = j + PAD
            kj = 2.0
            if not periodic and (j == 0 or j == n - 1):
                kj = 1.0
            h = 0.5 * (ki + kj)
            sr = p[a - 1, b - 1, 0] + p[a + 1, b + 1, 0] - h * p[a, b, 0]
            si = p[a - 1, b - 1, 1] + p[a + 1, b + 1, 1] - h * p[a, b, 1]
            out[i, j, 0] = s2r * sr - s2i * si
            out[i, j, 1] = s2r * si + s2i * sr
            if has_u:
                ur = p[a - 1, b + 1, 0] - 0.5 * (p[a - 2, b, 0] + p[a, b + 2, 0])
                ui = p[a - 1, b + 1, 1] - 0.5 * (p[a - 2, b, 1] + p[a, b + 2, 1])
                out[i, j, 0] += nur * ur - nui * ui
                out[i, j, 1] += nur * ui + nui * ur
            if has_d:
                dr = p[a + 1, b - 1, 0] - 0.5 * (p[a + 2, b, 0] + p[a, b - 2, 0])
                di = p[a + 1, b - 1, 1] - 0.5 * (p[a + 2, b, 1] + p[a, b - 2, 1])
                out[i, j, 0] += ndr * dr - ndi * di
                out[i, j, 1] += ndr * di + ndi * dr


def shift_generator(rho, sigma2, nu_u2, nu_d2, bint periodic):
    rr = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef Py_ssize_t n = rr.shape[0]
    cdef double[:, :, ::1] r = rr.view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] p = np.empty((n + 2 * PAD, n + 2 * PAD, 2))
    out = np.empty((n, n), dtype=np.complex128)
    cdef double[:, :, ::1] o = out.view(np.float64).reshape(n, n, 2)
    cdef double complex s2 = sigma2, nu = nu_u2, nd = nu_d2
    with nogil:
        _fill_pad(r, p, n, periodic)
        _generator(p, o, n, s2.real, s2.imag, nu.real, nu.imag, nd.real, nd.imag, periodic)
    return out


def euler_steps(rho, long n_steps, double dt, sigma2, nu_u2, nu_d2, bint periodic):
    res = np.array(rho, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = res.shape[0]
    cdef double[:, :, ::1] r = res.view(np.float64).reshape(n, n, 2)
    cdef double[:, :, ::1] p = np.empty((n + 2 * PAD, n + 2 * PAD, 2))
    cdef double[:, :, ::1] g = np.empty((n, n, 2))
    cdef double complex s2 = sigma2, nu = nu_u2, nd = nu_d2
    cdef double ar, ai, br, bi
    cdef Py_ssize_t i, j
    cdef long step
    with nogil:
        for step in range(n_steps):
            _fill_pad(r, p, n, periodic)
            _generator(p, g, n, s2.real, s2.imag, nu.real, nu.imag, nd.real, nd.imag, periodic)
            for i in range(n):
                for j in range(i, n):
                    ar = r[i, j, 0] + dt * g[i, j, 0]
                    ai = r[i, j, 1] + dt * g[i, j, 1]
                    br = r[j, i, 0] + dt * g[j, i, 0]
                    bi = r[j, i, 1] + dt * g[j, i, 1]
                    r[i, j, 0] = 0.5 * (ar + br)
                    r[i, j, 1] = 0.5 * (ai - bi)
                    r[j, i, 0] = r[i, j, 0]
                    r[j, i, 1] = -r[i, j, 1]
    return res
