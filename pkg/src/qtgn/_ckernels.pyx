# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels. Mirrors ``qtgn._pykernels`` one to one."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _cnot_real(double[::1] a, Py_ssize_t dim, int cbit, int tbit) noexcept nogil:
    cdef Py_ssize_t b, partner
    cdef Py_ssize_t cmask = (<Py_ssize_t>1) << cbit
    cdef Py_ssize_t tmask = (<Py_ssize_t>1) << tbit
    cdef double tmp
    for b in range(dim):
        if (b & cmask) and not (b & tmask):
            partner = b | tmask
            tmp = a[b]
            a[b] = a[partner]
            a[partner] = tmp


cdef inline void _cnot_complex(double complex[::1] a, Py_ssize_t dim, int cbit, int tbit) noexcept nogil:
    cdef Py_ssize_t b, partner
    cdef Py_ssize_t cmask = (<Py_ssize_t>1) << cbit
    cdef Py_ssize_t tmask = (<Py_ssize_t>1) << tbit
    cdef double complex tmp
    for b in range(dim):
        if (b & cmask) and not (b & tmask):
            partner = b | tmask
            tmp = a[b]
            a[b] = a[partner]
            a[partner] = tmp


def cnot(amps, int n, int control, int target):
    """Return a copy of ``amps`` with CNOT(control -> target) applied."""
    cdef cnp.ndarray out = np.array(amps, dtype=np.complex128, copy=True, order="C")
    cdef double complex[::1] view = out
    with nogil:
        _cnot_complex(view, view.shape[0], n - 1 - control, n - 1 - target)
    return out


def cnot_chain(amps, int n):
    cdef cnp.ndarray out = np.array(amps, dtype=np.complex128, copy=True, order="C")
    cdef double complex[::1] view = out
    cdef int q
    with nogil:
        for q in range(n - 1):
            _cnot_complex(view, view.shape[0], n - 1 - q, n - 2 - q)
    return out


def expect_z(amps, int n):
    cdef const double complex[::1] a = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef cnp.ndarray out = np.zeros(n, dtype=np.float64)
    cdef double[::1] z = out
    cdef Py_ssize_t b
    cdef int q
    cdef double p
    with nogil:
        for b in range(a.shape[0]):
            p = a[b].real * a[b].real + a[b].imag * a[b].imag
            for q in range(n):
                if (b >> (n - 1 - q)) & 1:
                    z[q] -= p
                else:
                    z[q] += p
    return out


def circuit_z_real(x, int n):
    """Fused CNOT chain + Z readout for a real, already normalized amplitude vector."""
    cdef cnp.ndarray buf = np.array(x, dtype=np.float64, copy=True, order="C")
    cdef double[::1] a = buf
    cdef cnp.ndarray out = np.zeros(n, dtype=np.float64)
    cdef double[::1] z = out
    cdef Py_ssize_t b, dim = a.shape[0]
    cdef int q
    cdef double p
    with nogil:
        for q in range(n - 1):
            _cnot_real(a, dim, n - 1 - q, n - 2 - q)
        for b in range(dim):
            p = a[b] * a[b]
            if p == 0.0:
                continue
            for q in range(n):
                if (b >> (n - 1 - q)) & 1:
                    z[q] -= p
                else:
                    z[q] += p
    return out


def z_from_samples(samples, int n):
    cdef const long long[::1] s = np.ascontiguousarray(samples, dtype=np.int64)
    cdef cnp.ndarray ones = np.zeros(n, dtype=np.int64)
    cdef long long[::1] n1 = ones
    cdef Py_ssize_t k, total = s.shape[0]
    cdef int q
    with nogil:
        for k in range(total):
            for q in range(n):
                if (s[k] >> (n - 1 - q)) & 1:
                    n1[q] += 1
    return (total - 2.0 * ones) / total


def flip_bits(samples, int n, double eps, uniforms):
    """Flip bit q of shot k wherever ``uniforms[k, q] < eps``."""
    cdef const long long[::1] s = np.ascontiguousarray(samples, dtype=np.int64)
    cdef const double[:, ::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef cnp.ndarray out = np.empty(s.shape[0], dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t k
    cdef int q
    cdef long long v
    with nogil:
        for k in range(s.shape[0]):
            v = s[k]
            for q in range(n):
                if u[k, q] < eps:
                    v ^= (<long long>1) << (n - 1 - q)
            o[k] = v
    return out
