# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense kernels: serial loops with a fixed accumulation order.

Unlike threaded BLAS, results here are reproducible bit-for-bit regardless
of the machine's thread configuration.
"""

import numpy as np

BACKEND_NAME = "compiled"


def affine(x, w, b):
    """x @ w + b for a batch x of shape (n, in), w (in, out), b (out,)."""
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], k = xv.shape[1], m = wv.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t
    cdef double xt
    with nogil:
        for i in range(n):
            for j in range(m):
                ov[i, j] = bv[j]
            for t in range(k):
                xt = xv[i, t]
                for j in range(m):
                    ov[i, j] += xt * wv[t, j]
    return out


def matmul_at_b(a, b):
    """a.T @ b for a (n, p) and b (n, q)."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], p = av.shape[1], q = bv.shape[1]
    out = np.zeros((p, q), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t
    cdef double at
    with nogil:
        for i in range(n):
            for t in range(p):
                at = av[i, t]
                for j in range(q):
                    ov[t, j] += at * bv[i, j]
    return out


def matmul_a_bt(a, b):
    """a @ b.T for a (n, p) and b (m, p)."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0], p = av.shape[1], m = bv.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t
    cdef double acc
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(p):
                    acc += av[i, t] * bv[j, t]
                ov[i, j] = acc
    return out
