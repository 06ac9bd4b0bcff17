# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled generator kernels; see ``_fallback`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef inline double _cov(const double[::1] p, const double complex[:, ::1] f,
                        const double complex[:, ::1] g, double mf, double mg) noexcept nogil:
    cdef Py_ssize_t n = p.shape[0], i, j
    cdef double acc = 0.0, row
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += f[i, j].real * g[i, j].real + f[i, j].imag * g[i, j].imag
        acc += p[i] * row
    return acc - mf * mg


def project_dissipator(p_in, target_in, ops_in, double tau, double tol=1e-12):
    cdef double[::1] p = np.ascontiguousarray(p_in, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef double complex[:, ::1] target = np.ascontiguousarray(target_in, dtype=np.complex128)
    ops_arr = np.ascontiguousarray(ops_in, dtype=np.complex128).reshape(-1, n, n)
    cdef double complex[:, :, ::1] ops = ops_arr
    cdef Py_ssize_t k = ops.shape[0]
    cdef Py_ssize_t i, j, a, b, m, c
    cdef double s, piv, mt

    means_arr = np.zeros(k)
    cdef double[::1] means = means_arr
    mt = 0.0
    for i in range(n):
        mt += p[i] * target[i, i].real
    for a in range(k):
        s = 0.0
        for i in range(n):
            s += p[i] * ops[a, i, i].real
        means[a] = s

    gram_arr = np.empty((k, k))
    rhs_arr = np.empty(k)
    cdef double[:, ::1] gram = gram_arr
    cdef double[::1] rhs = rhs_arr
    for a in range(k):
        rhs[a] = _cov(p, target, ops[a], mt, means[a])
        for b in range(a, k):
            gram[a, b] = _cov(p, ops[a], ops[b], means[a], means[b])
            gram[b, a] = gram[a, b]

    kept_arr = np.zeros(k, dtype=np.uint8)
    cdef unsigned char[::1] kept = kept_arr
    idx_arr = np.zeros(k, dtype=np.intp)
    cdef Py_ssize_t[::1] idx = idx_arr
    fac_arr = np.zeros((k, k))
    cdef double[:, ::1] fac = fac_arr
    m = 0
    for i in range(k):
        for a in range(m):
            s = gram[i, idx[a]]
            for c in range(a):
                s -= fac[m, c] * fac[a, c]
            fac[m, a] = s / fac[a, a]
        piv = gram[i, i]
        for c in range(m):
            piv -= fac[m, c] * fac[m, c]
        if piv <= tol * (gram[i, i] if gram[i, i] > 1.0 else 1.0):
            for c in range(m):
                fac[m, c] = 0.0
            continue
        fac[m, m] = sqrt(piv)
        idx[m] = i
        kept[i] = 1
        m += 1

    # forward then backward substitution on the retained block
    y_arr = np.zeros(k)
    lam_arr = np.zeros(k)
    cdef double[::1] y = y_arr
    cdef double[::1] lam = lam_arr
    for a in range(m):
        s = rhs[idx[a]]
        for c in range(a):
            s -= fac[a, c] * y[c]
        y[a] = s / fac[a, a]
    for a in range(m - 1, -1, -1):
        s = y[a]
        for c in range(a + 1, m):
            s -= fac[c, a] * lam[idx[c]]
        lam[idx[a]] = s / fac[a, a]

    mult_arr = np.empty(k + 1)
    cdef double[::1] mult = mult_arr
    s = mt
    for a in range(k):
        s -= lam[a] * means[a]
        mult[a + 1] = lam[a]
    mult[0] = s

    a_arr = np.empty((n, n), dtype=np.complex128)
    d_arr = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] A = a_arr
    cdef double complex[:, ::1] D = d_arr
    cdef double complex v
    cdef double rate = 0.0, scale = 0.5 / tau
    for i in range(n):
        for j in range(n):
            v = target[i, j]
            for a in range(k):
                if kept[a]:
                    v = v - lam[a] * ops[a, i, j]
            if i == j:
                v = v - mult[0]
            A[i, j] = v
            D[i, j] = v * ((p[i] + p[j]) * scale)
            rate += p[i] * (v.real * v.real + v.imag * v.imag)
    return a_arr, d_arr, mult_arr, kept_arr, rate / tau


def hamiltonian_eig(p_in, h_in):
    cdef double[::1] p = np.ascontiguousarray(p_in, dtype=np.float64)
    cdef double complex[:, ::1] h = np.ascontiguousarray(h_in, dtype=np.complex128)
    cdef Py_ssize_t n = p.shape[0], i, j
    out_arr = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    for i in range(n):
        for j in range(n):
            out[i, j] = -1j * h[i, j] * (p[j] - p[i])
    return out_arr
