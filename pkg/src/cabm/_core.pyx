# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Philox streams, Pfaffians and the particle stepper.

Every function here has a twin in :mod:`cabm._fallback` with the same
signature and bit-identical output.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint32_t, uint64_t
from libc.math cimport exp, sqrt, fabs
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal, random_standard_uniform

cnp.import_array()

cdef extern from *:
    """
    static inline uint64_t cabm_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) {
        unsigned __int128 p = (unsigned __int128)a * b;
        *hi = (uint64_t)(p >> 64);
        return (uint64_t)p;
    }
    """
    uint64_t cabm_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) nogil

cdef double PIVOT_FLOOR = 1e-300

cdef struct philox_t:
    uint64_t ctr[4]
    uint64_t key[2]
    uint64_t buf[4]
    int pos


cdef inline void _philox_refill(philox_t *s) noexcept nogil:
    # Philox4x64-10, counter incremented before each block (numpy's order)
    cdef uint64_t c0, c1, c2, c3, k0, k1, hi0, hi1, lo0, lo1
    cdef int r
    s.ctr[0] += 1
    if s.ctr[0] == 0:
        s.ctr[1] += 1
        if s.ctr[1] == 0:
            s.ctr[2] += 1
            if s.ctr[2] == 0:
                s.ctr[3] += 1
    c0 = s.ctr[0]; c1 = s.ctr[1]; c2 = s.ctr[2]; c3 = s.ctr[3]
    k0 = s.key[0]; k1 = s.key[1]
    for r in range(10):
        if r > 0:
            k0 += 0x9E3779B97F4A7C15ULL
            k1 += 0xBB67AE8584CAA73BULL
        lo0 = cabm_mulhilo(0xD2E7470EE14C6C93ULL, c0, &hi0)
        lo1 = cabm_mulhilo(0xCA5A826395121157ULL, c2, &hi1)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    s.buf[0] = c0; s.buf[1] = c1; s.buf[2] = c2; s.buf[3] = c3
    s.pos = 0


cdef uint64_t _philox_next64(void *st) noexcept nogil:
    cdef philox_t *s = <philox_t *> st
    if s.pos >= 4:
        _philox_refill(s)
    s.pos += 1
    return s.buf[s.pos - 1]


cdef uint32_t _philox_next32(void *st) noexcept nogil:
    return <uint32_t> (_philox_next64(st) >> 32)


cdef double _philox_next_double(void *st) noexcept nogil:
    return (_philox_next64(st) >> 11) * (1.0 / 9007199254740992.0)


cdef inline void _philox_seed(philox_t *s, bitgen_t *bg, uint64_t seed, uint64_t stream) noexcept nogil:
    s.ctr[0] = 0; s.ctr[1] = 0; s.ctr[2] = 0; s.ctr[3] = 0
    s.key[0] = seed
    s.key[1] = stream
    s.pos = 4
    bg.state = <void *> s
    bg.next_uint64 = &_philox_next64
    bg.next_uint32 = &_philox_next32
    bg.next_double = &_philox_next_double
    bg.next_raw = &_philox_next64


def philox_doubles(uint64_t seed, uint64_t stream, Py_ssize_t n):
    """First ``n`` uniforms of stream ``(seed, stream)``; used to pin the RNG."""
    cdef philox_t s
    cdef bitgen_t bg
    cdef Py_ssize_t i
    cdef double[::1] out = np.empty(n)
    _philox_seed(&s, &bg, seed, stream)
    for i in range(n):
        out[i] = random_standard_uniform(&bg)
    return np.asarray(out)


# --------------------------------------------------------------------------
# Pfaffian


cdef double _pf_inplace(double *a, Py_ssize_t n) noexcept nogil:
    # skew LTL^T elimination with partial pivoting; a is row-major n x n
    cdef Py_ssize_t k, kp, i, j
    cdef double pf = 1.0, big, v, piv, tmp, ti
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    for k in range(0, n - 1, 2):
        kp = k + 1
        big = fabs(a[(k + 1) * n + k])
        for i in range(k + 2, n):
            v = fabs(a[i * n + k])
            if v > big:
                big = v
                kp = i
        if big < PIVOT_FLOOR:
            return 0.0
        if kp != k + 1:
            for j in range(n):
                tmp = a[(k + 1) * n + j]
                a[(k + 1) * n + j] = a[kp * n + j]
                a[kp * n + j] = tmp
            for i in range(n):
                tmp = a[i * n + k + 1]
                a[i * n + k + 1] = a[i * n + kp]
                a[i * n + kp] = tmp
            pf = -pf
        piv = a[k * n + k + 1]
        pf *= piv
        for i in range(k + 2, n):
            ti = a[k * n + i] / piv
            for j in range(k + 2, n):
                a[i * n + j] += ti * a[j * n + k + 1] - a[i * n + k + 1] * (a[k * n + j] / piv)
    return pf


def pfaffian(const double[:, ::1] A):
    cdef Py_ssize_t n = A.shape[0]
    cdef double *buf
    cdef double out
    if A.shape[1] != n:
        raise ValueError("matrix must be square")
    buf = <double *> malloc(max(n * n, 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        if n:
            memcpy(buf, &A[0, 0], n * n * sizeof(double))
        with nogil:
            out = _pf_inplace(buf, n)
    finally:
        free(buf)
    return out


def pfaffian_batch(const double[:, :, ::1] A):
    cdef Py_ssize_t b, nb = A.shape[0], n = A.shape[1]
    cdef double *buf
    cdef double[::1] out = np.empty(nb)
    if A.shape[2] != n:
        raise ValueError("matrices must be square")
    buf = <double *> malloc(max(n * n, 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for b in range(nb):
                if n:
                    memcpy(buf, &A[b, 0, 0], n * n * sizeof(double))
                out[b] = _pf_inplace(buf, n)
    finally:
        free(buf)
    return np.asarray(out)


# --------------------------------------------------------------------------
# Particle stepper


cdef inline void _insertion_sort(double *v, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, n):
        key = v[i]
        j = i - 1
        while j >= 0 and v[j] > key:
            v[j + 1] = v[j]
            j -= 1
        v[j + 1] = key


cdef Py_ssize_t _step(double *x, Py_ssize_t n, double theta, double dt, double sd,
                      bitgen_t *rng, double *y, double *uc, double *ut) noexcept nogil:
    """One synchronous move + reaction pass; new state written back into x."""
    cdef Py_ssize_t i, m, j
    cdef double d0, d1
    cdef bint react
    if n == 0:
        return 0
    for i in range(n):
        y[i] = x[i] + sd * random_standard_normal(rng)
    if n == 1:
        x[0] = y[0]
        return 1
    for i in range(n - 1):
        uc[i] = random_standard_uniform(rng)
    for i in range(n - 1):
        ut[i] = random_standard_uniform(rng)
    m = 0
    i = 0
    # y is read at i, i+1 only and m <= i, so writing into x is safe
    while i < n:
        if i + 1 < n:
            d0 = x[i + 1] - x[i]
            d1 = y[i + 1] - y[i]
            if d1 <= 0.0:
                react = True
            else:
                react = uc[i] < exp(-d0 * d1 / (2.0 * dt))
            if react:
                if not (ut[i] < theta):
                    if d1 <= 0.0:
                        x[m] = 0.5 * (x[i] + x[i + 1])
                    else:
                        x[m] = 0.5 * (y[i] + y[i + 1])
                    m += 1
                i += 2
                continue
        x[m] = y[i]
        m += 1
        i += 1
    _insertion_sort(x, m)
    return _resolve_ties(x, m, theta)


cdef Py_ssize_t _resolve_ties(double *x, Py_ssize_t m, double theta) noexcept nogil:
    # exact coincidences are null events; merge them deterministically
    cdef Py_ssize_t i = 0, k = 0
    while i < m:
        if i + 1 < m and x[i] == x[i + 1]:
            if theta < 1.0:
                x[k] = x[i]
                k += 1
            i += 2
        else:
            x[k] = x[i]
            k += 1
            i += 1
    return k


def run_batch(const double[::1] init, double theta, const double[::1] dts,
              uint64_t seed, Py_ssize_t rep_start, Py_ssize_t rep_stop):
    """Final configurations of replicas ``rep_start..rep_stop-1``.

    ``dts`` holds the step sizes. Returns ``(positions, offsets)`` in CSR layout.
    """
    cdef Py_ssize_t n0 = init.shape[0], nrep = rep_stop - rep_start
    cdef Py_ssize_t nsteps = dts.shape[0]
    cdef Py_ssize_t r, s, n, total = 0
    cdef double[::1] sds = np.sqrt(2.0 * np.asarray(dts))
    cdef philox_t ps
    cdef bitgen_t bg
    cdef double[::1] pos = np.empty(max(nrep * n0, 1))
    cdef cnp.int64_t[::1] off = np.zeros(nrep + 1, dtype=np.int64)
    cdef double *x = <double *> malloc((n0 + 1) * sizeof(double))
    cdef double *y = <double *> malloc((n0 + 1) * sizeof(double))
    cdef double *uc = <double *> malloc((n0 + 1) * sizeof(double))
    cdef double *ut = <double *> malloc((n0 + 1) * sizeof(double))
    if x == NULL or y == NULL or uc == NULL or ut == NULL:
        free(x); free(y); free(uc); free(ut)
        raise MemoryError()
    try:
        with nogil:
            for r in range(nrep):
                _philox_seed(&ps, &bg, seed, <uint64_t> (rep_start + r))
                if n0:
                    memcpy(x, &init[0], n0 * sizeof(double))
                n = n0
                for s in range(nsteps):
                    n = _step(x, n, theta, dts[s], sds[s], &bg, y, uc, ut)
                for s in range(n):
                    pos[total + s] = x[s]
                total += n
                off[r + 1] = total
    finally:
        free(x); free(y); free(uc); free(ut)
    return np.asarray(pos)[:total].copy(), np.asarray(off)


def run_trajectory(const double[::1] init, double theta, const double[::1] dts,
                   uint64_t seed, Py_ssize_t rep, Py_ssize_t record_every):
    """Snapshots of one replica at steps 0, k, 2k, ... and the final step.

    Returns ``(steps, positions, offsets)``.
    """
    cdef Py_ssize_t n0 = init.shape[0], s, i, n, total = 0, ns = 0
    cdef Py_ssize_t nsteps = dts.shape[0]
    cdef Py_ssize_t nsnap = nsteps // record_every + 2
    cdef double[::1] sds = np.sqrt(2.0 * np.asarray(dts))
    cdef philox_t ps
    cdef bitgen_t bg
    cdef cnp.int64_t[::1] steps = np.empty(nsnap, dtype=np.int64)
    cdef cnp.int64_t[::1] off = np.zeros(nsnap + 1, dtype=np.int64)
    cdef double[::1] pos = np.empty(max(nsnap * n0, 1))
    cdef double *x = <double *> malloc((n0 + 1) * sizeof(double))
    cdef double *y = <double *> malloc((n0 + 1) * sizeof(double))
    cdef double *uc = <double *> malloc((n0 + 1) * sizeof(double))
    cdef double *ut = <double *> malloc((n0 + 1) * sizeof(double))
    if x == NULL or y == NULL or uc == NULL or ut == NULL:
        free(x); free(y); free(uc); free(ut)
        raise MemoryError()
    try:
        with nogil:
            _philox_seed(&ps, &bg, seed, <uint64_t> rep)
            if n0:
                memcpy(x, &init[0], n0 * sizeof(double))
            n = n0
            for s in range(nsteps + 1):
                if s > 0:
                    n = _step(x, n, theta, dts[s - 1], sds[s - 1], &bg, y, uc, ut)
                if s % record_every == 0 or s == nsteps:
                    steps[ns] = s
                    for i in range(n):
                        pos[total + i] = x[i]
                    total += n
                    ns += 1
                    off[ns] = total
    finally:
        free(x); free(y); free(uc); free(ut)
    return (np.asarray(steps)[:ns].copy(), np.asarray(pos)[:total].copy(),
            np.asarray(off)[:ns + 1].copy())
