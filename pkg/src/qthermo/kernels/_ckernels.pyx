# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled candidate-evaluation kernels (same contract as _pykernels)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _matmul(const double complex[:, ::1] a, const double complex[:, ::1] b,
                  double complex[:, ::1] out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex s
    for i in range(d):
        for j in range(d):
            s = 0
            for k in range(d):
                s = s + a[i, k] * b[k, j]
            out[i, j] = s


cdef void _conjugate(const double complex[:, ::1] v, const double complex[:, ::1] rho,
                     double complex[:, ::1] tmp, double complex[:, ::1] out,
                     Py_ssize_t d) noexcept nogil:
    # out = v rho v^dag
    cdef Py_ssize_t i, j, k
    cdef double complex s
    _matmul(v, rho, tmp, d)
    for i in range(d):
        for j in range(d):
            s = 0
            for k in range(d):
                s = s + tmp[i, k] * (v[j, k].real - 1j * v[j, k].imag)
            out[i, j] = s


cdef void _composite(const double complex[:, :, ::1] u, const long long[::1] seq,
                     double complex[:, ::1] v, double complex[:, ::1] scratch,
                     Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef long long idx
    for i in range(d):
        for j in range(d):
            v[i, j] = 1.0 if i == j else 0.0
    for k in range(seq.shape[0]):
        idx = seq[k]
        if idx < 0:
            continue
        _matmul(u[idx], v, scratch, d)
        for i in range(d):
            for j in range(d):
                v[i, j] = scratch[i, j]


def sequence_final_states(unitaries, seqs, rho):
    cdef double complex[:, :, ::1] u = np.ascontiguousarray(unitaries, dtype=np.complex128)
    cdef long long[:, ::1] s = np.ascontiguousarray(seqs, dtype=np.int64)
    cdef double complex[:, ::1] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef Py_ssize_t n = s.shape[0], d = r.shape[0], c
    out_arr = np.empty((n, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex[:, ::1] v = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] scratch = np.empty((d, d), dtype=np.complex128)
    with nogil:
        for c in range(n):
            _composite(u, s[c], v, scratch, d)
            _conjugate(v, r, scratch, out[c], d)
    return out_arr


def sequence_energies(unitaries, seqs, rho, h):
    cdef double complex[:, :, ::1] u = np.ascontiguousarray(unitaries, dtype=np.complex128)
    cdef long long[:, ::1] s = np.ascontiguousarray(seqs, dtype=np.int64)
    cdef double complex[:, ::1] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef double complex[:, ::1] hh = np.ascontiguousarray(h, dtype=np.complex128)
    cdef Py_ssize_t n = s.shape[0], d = r.shape[0], c, i, j
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double complex[:, ::1] v = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] scratch = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] state = np.empty((d, d), dtype=np.complex128)
    cdef double acc
    with nogil:
        for c in range(n):
            _composite(u, s[c], v, scratch, d)
            _conjugate(v, r, scratch, state, d)
            acc = 0.0
            for i in range(d):
                for j in range(d):
                    acc = acc + (hh[i, j] * state[j, i]).real
            out[c] = acc
    return out_arr
