# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling kernels.  Must stay bit-identical to ``_pyfallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, NAN
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t GAMMA_COUNTER = 0xD1B54A32D192ED03ULL
cdef double TO_UNIT = 1.1102230246251565e-16  # 2**-53

BACKEND = "compiled"


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t base, uint64_t k) noexcept nogil:
    return mix64(base + k * GAMMA)


cdef inline double u01(uint64_t key, uint64_t c) noexcept nogil:
    return <double>(mix64(key + (c + 1) * GAMMA_COUNTER) >> 11) * TO_UNIT


cdef inline double draw(uint64_t key, uint64_t c, bint sqrt_u) noexcept nogil:
    if sqrt_u:
        return sqrt(u01(key, c))
    return u01(key, c)


def direct_loop(const double[:, ::1] M, uint64_t seed, int64_t start, int64_t count, bint sqrt_u):
    """One sample at a time: draw ``u``, then the triangular product ``M u``."""
    cdef Py_ssize_t n = M.shape[0], i, j, k
    cdef uint64_t base = mix64(seed + GAMMA), key
    cdef double acc
    out_arr = np.empty((n, count))
    u_arr = np.empty(n)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] u = u_arr
    with nogil:
        for k in range(count):
            key = stream_key(base, <uint64_t>(start + k))
            for i in range(n):
                u[i] = u01(key, i)
                if sqrt_u:
                    u[i] = sqrt(u[i])
            for i in range(n):
                acc = 0.0
                for j in range(i + 1):
                    acc = acc + M[i, j] * u[j]
                out[i, k] = acc
    return out_arr


def uniform_fill(uint64_t seed, int64_t start, int64_t count, Py_ssize_t n, bint sqrt_u):
    """``n x count`` block of unit draws, row ``i`` = counter ``i``."""
    cdef Py_ssize_t i, k
    cdef uint64_t base = mix64(seed + GAMMA)
    u_arr = np.empty((n, count))
    keys_arr = np.empty(count, dtype=np.uint64)
    cdef double[:, ::1] u = u_arr
    cdef uint64_t[::1] keys = keys_arr
    with nogil:
        for k in range(count):
            keys[k] = stream_key(base, <uint64_t>(start + k))
        for i in range(n):
            for k in range(count):
                u[i, k] = u01(keys[k], i)
            if sqrt_u:
                for k in range(count):
                    u[i, k] = sqrt(u[i, k])
    return u_arr


def direct_batch(const double[:, ::1] M, uint64_t seed, int64_t start, int64_t count, bint sqrt_u):
    """Whole batch at once: fill ``U`` then one triangular matrix-matrix product."""
    cdef Py_ssize_t n = M.shape[0], i, j, k
    u_arr = uniform_fill(seed, start, count, n, sqrt_u)
    out_arr = np.zeros((n, count))
    cdef double[:, ::1] u = u_arr
    cdef double[:, ::1] out = out_arr
    cdef double m
    with nogil:
        for i in range(n):
            for j in range(i + 1):
                m = M[i, j]
                for k in range(count):
                    out[i, k] = out[i, k] + m * u[j, k]
    return out_arr


cdef inline bint feasible(double* beta, const double* L, Py_ssize_t n) noexcept nogil:
    cdef double prev_b = 0.0, prev_end = 0.0, end
    cdef Py_ssize_t i
    for i in range(n):
        if beta[i] > prev_b:
            return False
        end = L[i] + beta[i]
        if end < prev_end:
            return False
        prev_b = beta[i]
        prev_end = end
    return True


def reject(const double[::1] L, int pin, uint64_t seed, int64_t start, int64_t count, int64_t max_attempts,
           bint sqrt_u=False):
    """Draw ``beta = -L * u`` and redraw every entry except ``pin`` until feasible.

    ``pin = -1`` redraws everything; ``sqrt_u`` draws ``u = sqrt(v)``.  Returns ``(beta, attempts, failed)``;
    failed samples carry NaN.
    """
    cdef Py_ssize_t n = L.shape[0], i, k
    cdef uint64_t base = mix64(seed + GAMMA), key, c
    cdef int64_t tries
    cdef bint ok
    out_arr = np.empty((n, count))
    attempts_arr = np.empty(count, dtype=np.int64)
    failed_arr = np.zeros(count, dtype=np.bool_)
    b_arr = np.empty(n)
    cdef double[:, ::1] out = out_arr
    cdef int64_t[::1] attempts = attempts_arr
    cdef cnp.npy_bool[::1] failed = failed_arr
    cdef double[::1] b = b_arr
    with nogil:
        for k in range(count):
            key = stream_key(base, <uint64_t>(start + k))
            c = 0
            for i in range(n):
                b[i] = -L[i] * draw(key, c, sqrt_u)
                c += 1
            tries = 1
            ok = feasible(&b[0], &L[0], n)
            while not ok and tries < max_attempts:
                for i in range(n):
                    if i != pin:
                        b[i] = -L[i] * draw(key, c, sqrt_u)
                        c += 1
                tries += 1
                ok = feasible(&b[0], &L[0], n)
            attempts[k] = tries
            if ok:
                for i in range(n):
                    out[i, k] = b[i]
            else:
                failed[k] = True
                for i in range(n):
                    out[i, k] = NAN
    return out_arr, attempts_arr, failed_arr


def pair_moments(const double[:, ::1] a, const double[:, ::1] b, bint same):
    """Count, sum and sum of squares of Euclidean distances between rows of
    ``a`` and ``b`` (only ``i < j`` pairs when ``same``)."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1], i, j, t
    cdef double s = 0.0, s2 = 0.0, acc, diff, dist
    cdef int64_t cnt = 0
    with nogil:
        for i in range(na):
            for j in range((i + 1) if same else 0, nb):
                acc = 0.0
                for t in range(d):
                    diff = a[i, t] - b[j, t]
                    acc = acc + diff * diff
                dist = sqrt(acc)
                s = s + dist
                s2 = s2 + acc
                cnt += 1
    return cnt, s, s2
