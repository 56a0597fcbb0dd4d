# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _fallback.py for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p
from libc.stdint cimport uint64_t, int64_t

cdef extern from "complex.h":
    double complex cexp(double complex) nogil
    double complex clog(double complex) nogil

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _next(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    return _mix(state[0])


cdef inline uint64_t _stream_seed(uint64_t seed, uint64_t index) nogil:
    cdef uint64_t st = seed ^ (index * 0xD1B54A32D192ED03ULL)
    return _next(&st)


cdef inline double _exp1(uint64_t* state) nogil:
    cdef uint64_t x = _next(state)
    cdef double u = <double>(x >> 11) * (1.0 / 9007199254740992.0)
    return -log1p(-u)


cdef inline int64_t _uniform_int(uint64_t* state, int64_t n) nogil:
    cdef uint64_t x = _next(state)
    # ((x >> 11) * n) >> 53 without overflow for n < 2^11
    return <int64_t>(((x >> 11) * <uint64_t>n) >> 53)


cdef void _table(int64_t[:] y, double complex v, double complex[:, :] w) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0]
    cdef int64_t lo = y[n - 1] + 1
    cdef Py_ssize_t span = y[0] - y[n - 1]
    cdef double complex ratio = -v / (v + 1)
    cdef double complex a = v + 1
    cdef double complex stop, s
    cdef Py_ssize_t m, k, j
    for m in range(n - 1, -1, -1):
        stop = 2
        for j in range(m):
            stop = stop * ratio
        s = 0
        for k in range(span):
            if lo + k > y[m]:
                w[m, k] = stop
            else:
                w[m, k] = s
            if m + 1 < n:
                s = a * (s + w[m + 1, k])
            else:
                s = 0


def hitting_table_w(y, double complex v):
    cdef int64_t[:] yy = np.ascontiguousarray(y, dtype=np.int64)
    cdef Py_ssize_t span = yy[0] - yy[yy.shape[0] - 1]
    out = np.zeros((yy.shape[0], span), dtype=complex)
    cdef double complex[:, :] w = out
    _table(yy, v, w)
    return out


def ch_matrix(y, vs, us):
    cdef int64_t[:] yy = np.ascontiguousarray(y, dtype=np.int64)
    cdef double complex[:] vv = np.ascontiguousarray(vs, dtype=complex)
    cdef double complex[:] uu = np.ascontiguousarray(us, dtype=complex)
    cdef Py_ssize_t n = yy.shape[0]
    cdef int64_t lo = yy[n - 1] + 1
    cdef Py_ssize_t span = yy[0] - yy[n - 1]
    out = np.empty((vv.shape[0], uu.shape[0]), dtype=complex)
    cdef double complex[:, :] o = out
    tab = np.zeros((n, span), dtype=complex)
    cdef double complex[:, :] w = tab
    cdef Py_ssize_t i, j, k
    cdef double complex v, u, r, lr, acc, p
    for i in range(vv.shape[0]):
        v = vv[i]
        with nogil:
            _table(yy, v, w)
            for j in range(uu.shape[0]):
                u = uu[j]
                r = (u + 1) / (v + 1)
                lr = clog(r)
                acc = 0
                p = cexp(<double>lo * lr)
                for k in range(span):
                    acc = acc + p * w[0, k]
                    p = p * r
                o[i, j] = cexp(<double>(yy[0] + 1) * lr) / (v - u) + acc / (2 * (v + 1))
    return out


def simulate_tasep(y, times, Py_ssize_t n_samples, uint64_t seed, uint64_t start=0):
    cdef int64_t[:] y0 = np.ascontiguousarray(y, dtype=np.int64)
    cdef double[:] tt = np.ascontiguousarray(times, dtype=float)
    cdef Py_ssize_t n = y0.shape[0], nq = tt.shape[0]
    out = np.empty((n_samples, nq, n), dtype=np.int64)
    cdef int64_t[:, :, :] o = out
    cdef int64_t[:] x = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t s, q, i, k
    cdef uint64_t st
    cdef double t
    with nogil:
        for s in range(n_samples):
            st = _stream_seed(seed, start + <uint64_t>s)
            for k in range(n):
                x[k] = y0[k]
            t = 0.0
            q = 0
            while q < nq:
                t += _exp1(&st) / n
                while q < nq and tt[q] < t:
                    for k in range(n):
                        o[s, q, k] = x[k]
                    q += 1
                if q == nq:
                    break
                i = _uniform_int(&st, n)
                if i == 0 or x[i - 1] > x[i] + 1:
                    x[i] += 1
    return out


def lpp_jump_times(y, jumps, Py_ssize_t n_samples, uint64_t seed, uint64_t start=0):
    cdef int64_t[:] yy = np.ascontiguousarray(y, dtype=np.int64)
    cdef int64_t[:] jj = np.ascontiguousarray(jumps, dtype=np.int64)
    cdef Py_ssize_t n = jj.shape[0]
    cdef Py_ssize_t k
    offsets = np.zeros(n + 1, dtype=np.int64)
    for k in range(n):
        offsets[k + 1] = offsets[k] + jj[k] + 1
    cdef int64_t[:] off = offsets
    flat = np.zeros((n_samples, offsets[n]), dtype=float)
    cdef double[:, :] f = flat
    cdef Py_ssize_t s, j
    cdef int64_t jp
    cdef uint64_t st
    cdef double t, tp
    with nogil:
        for s in range(n_samples):
            st = _stream_seed(seed, start + <uint64_t>s)
            for k in range(n):
                for j in range(1, jj[k] + 1):
                    t = f[s, off[k] + j - 1]
                    if k > 0:
                        jp = j + yy[k] + 1 - yy[k - 1]
                        if jp > 0:
                            tp = f[s, off[k - 1] + jp]
                            if tp > t:
                                t = tp
                    f[s, off[k] + j] = t + _exp1(&st)
    return [flat[:, offsets[k]:offsets[k + 1]] for k in range(n)]
