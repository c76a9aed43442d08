# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the MWU solver.

Every reduction here runs in ascending index order and the C flags disable
FMA contraction, so results match ``_pycore`` bit for bit. Thread-parallel
loops only distribute independent output entries; each entry's own sum is
still accumulated sequentially, so the thread count never changes a result.
"""

import numpy as np
from cython.parallel cimport prange
from libc.math cimport fabs

ctypedef double[:, ::1] mat_t
ctypedef const double[:, ::1] cmat_t

# status codes shared with _pycore
cdef enum:
    RUNNING = 0
    CONVERGED_STEP = 1
    CONVERGED_VALUE = 2
    REACHED_TARGET = 3
    SAFEGUARD_EXHAUSTED = 4

STATUS_RUNNING = RUNNING
STATUS_CONVERGED_STEP = CONVERGED_STEP
STATUS_CONVERGED_VALUE = CONVERGED_VALUE
STATUS_REACHED_TARGET = REACHED_TARGET
STATUS_SAFEGUARD_EXHAUSTED = SAFEGUARD_EXHAUSTED

NAME = "cython"


cdef inline double _seqsum(cmat_t a) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            acc = acc + a[i, j]
    return acc


cdef inline double _seqsum_prod(cmat_t a, cmat_t b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            acc = acc + a[i, j] * b[i, j]
    return acc


cdef void _matmul(cmat_t a, cmat_t b, mat_t out, int nthreads) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t n = a.shape[0], p = a.shape[1], m = b.shape[1]
    cdef double acc
    for i in prange(n, use_threads_if=nthreads > 1, num_threads=nthreads,
                    schedule="static"):
        for j in range(m):
            acc = 0.0
            for k in range(p):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc


cdef double _residual(cmat_t vs, cmat_t w, cmat_t h, mat_t out, int nthreads) noexcept nogil:
    """out = vs - w h; returns the sequential sum of squares of out."""
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t n = w.shape[0], r = w.shape[1], m = h.shape[1]
    cdef double acc
    for i in prange(n, use_threads_if=nthreads > 1, num_threads=nthreads,
                    schedule="static"):
        for j in range(m):
            acc = 0.0
            for k in range(r):
                acc = acc + w[i, k] * h[k, j]
            out[i, j] = vs[i, j] - acc
    return _seqsum_prod(out, out)


cdef void _gradient(cmat_t R, cmat_t w, cmat_t h, mat_t gw, mat_t gh, int nthreads) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t n = w.shape[0], r = w.shape[1], m = h.shape[1]
    cdef double acc
    for i in prange(n, use_threads_if=nthreads > 1, num_threads=nthreads,
                    schedule="static"):
        for k in range(r):
            acc = 0.0
            for j in range(m):
                acc = acc + R[i, j] * h[k, j]
            gw[i, k] = -2.0 * acc
    for k in prange(r, use_threads_if=nthreads > 1, num_threads=nthreads,
                    schedule="static"):
        for j in range(m):
            acc = 0.0
            for i in range(n):
                acc = acc + w[i, k] * R[i, j]
            gh[k, j] = -2.0 * acc


cdef double _min_multiplier(cmat_t g, double eps) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double lo = 1.0, v
    for i in range(g.shape[0]):
        for j in range(g.shape[1]):
            v = 1.0 - eps * g[i, j]
            if v < lo:
                lo = v
    return lo


cdef void _apply(cmat_t x, cmat_t g, double eps, double Z, mat_t out, int nthreads) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in prange(x.shape[0], use_threads_if=nthreads > 1, num_threads=nthreads,
                    schedule="static"):
        for j in range(x.shape[1]):
            out[i, j] = x[i, j] * (1.0 - eps * g[i, j]) / Z


cdef void _divide(mat_t x, double s, int nthreads) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in prange(x.shape[0], use_threads_if=nthreads > 1, num_threads=nthreads,
                    schedule="static"):
        for j in range(x.shape[1]):
            x[i, j] = x[i, j] / s


cdef double _max_change(cmat_t a, cmat_t b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double hi = 0.0, v
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            v = fabs(a[i, j] - b[i, j])
            if v > hi:
                hi = v
    return hi


cdef double _min_entry(cmat_t a, double lo) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] < lo:
                lo = a[i, j]
    return lo


cdef void _copy(cmat_t src, mat_t dst) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(src.shape[0]):
        for j in range(src.shape[1]):
            dst[i, j] = src[i, j]


cdef bint _try_step(cmat_t vs, cmat_t w, cmat_t h, cmat_t gw, cmat_t gh, double inner,
                    double eps, mat_t w_new, mat_t h_new, mat_t R_new,
                    double* F_new, int nthreads) noexcept nogil:
    """One multiplicative update at step size eps; False if eps is too large."""
    cdef double Z = 1.0 - eps * inner
    cdef double total
    if not Z > 0.0:
        return False
    if not _min_multiplier(gw, eps) > 0.0 or not _min_multiplier(gh, eps) > 0.0:
        return False
    _apply(w, gw, eps, Z, w_new, nthreads)
    _apply(h, gh, eps, Z, h_new, nthreads)
    total = _seqsum(w_new) + _seqsum(h_new)
    _divide(w_new, total, nthreads)
    _divide(h_new, total, nthreads)
    F_new[0] = _residual(vs, w_new, h_new, R_new, nthreads)
    return True


def seqsum(const double[:, ::1] a):
    return _seqsum(a)


def matmul(const double[:, ::1] a, const double[:, ::1] b, int num_threads=1):
    out = np.empty((a.shape[0], b.shape[1]), dtype=np.float64)
    cdef mat_t o = out
    with nogil:
        _matmul(a, b, o, num_threads)
    return out


def residual(const double[:, ::1] vs, const double[:, ::1] w, const double[:, ::1] h, int num_threads=1):
    out = np.empty((w.shape[0], h.shape[1]), dtype=np.float64)
    cdef mat_t o = out
    cdef double F
    with nogil:
        F = _residual(vs, w, h, o, num_threads)
    return out, F


def gradient(const double[:, ::1] R, const double[:, ::1] w, const double[:, ::1] h, int num_threads=1):
    gw_arr = np.empty((w.shape[0], w.shape[1]), dtype=np.float64)
    gh_arr = np.empty((h.shape[0], h.shape[1]), dtype=np.float64)
    cdef mat_t gw = gw_arr, gh = gh_arr
    with nogil:
        _gradient(R, w, h, gw, gh, num_threads)
    return gw_arr, gh_arr


def mwu_step(const double[:, ::1] vs, const double[:, ::1] w, const double[:, ::1] h, double eps,
             int num_threads=1):
    """Single unguarded update. Returns (w_new, h_new, R_new, F_new) or None."""
    cdef Py_ssize_t n = w.shape[0], r = w.shape[1], m = h.shape[1]
    R_arr = np.empty((n, m), dtype=np.float64)
    gw_arr = np.empty((n, r), dtype=np.float64)
    gh_arr = np.empty((r, m), dtype=np.float64)
    w_arr = np.empty((n, r), dtype=np.float64)
    h_arr = np.empty((r, m), dtype=np.float64)
    cdef mat_t R = R_arr, gw = gw_arr, gh = gh_arr, wn = w_arr, hn = h_arr
    cdef double inner, F_new = 0.0
    cdef bint ok
    with nogil:
        _residual(vs, w, h, R, num_threads)
        _gradient(R, w, h, gw, gh, num_threads)
        inner = _seqsum_prod(w, gw) + _seqsum_prod(h, gh)
        ok = _try_step(vs, w, h, gw, gh, inner, eps, wn, hn, R, &F_new, num_threads)
    if not ok:
        return None
    return w_arr, h_arr, R_arr, F_new


def mwu_iterate(const double[:, ::1] vs, double[:, ::1] w, double[:, ::1] h,
                double[:, ::1] R, double F, double F0, double eps,
                Py_ssize_t n_iters, double step_tol, double value_tol,
                double target, double mono_tol, double eps_floor, double scale4,
                double[:, ::1] records, int num_threads=1):
    """Run up to ``n_iters`` accepted steps, updating w, h, R in place.

    records[t] receives (objective * scale4, max entry change, eps, mass,
    min entry). Returns (steps_done, status, eps, F, halvings).
    """
    cdef Py_ssize_t n = w.shape[0], r = w.shape[1], m = h.shape[1]
    gw_arr = np.empty((n, r), dtype=np.float64)
    gh_arr = np.empty((r, m), dtype=np.float64)
    wn_arr = np.empty((n, r), dtype=np.float64)
    hn_arr = np.empty((r, m), dtype=np.float64)
    Rn_arr = np.empty((n, m), dtype=np.float64)
    cdef mat_t gw = gw_arr, gh = gh_arr, wn = wn_arr, hn = hn_arr, Rn = Rn_arr
    cdef Py_ssize_t t, done = 0
    cdef int status = RUNNING
    cdef long halvings = 0
    cdef double inner, F_new = 0.0, change
    cdef bint accepted
    with nogil:
        for t in range(n_iters):
            _gradient(R, w, h, gw, gh, num_threads)
            inner = _seqsum_prod(w, gw) + _seqsum_prod(h, gh)
            while True:
                if eps < eps_floor:
                    status = SAFEGUARD_EXHAUSTED
                    break
                accepted = _try_step(vs, w, h, gw, gh, inner, eps, wn, hn, Rn,
                                     &F_new, num_threads)
                if accepted and F_new <= F + mono_tol:
                    break
                eps = eps * 0.5
                halvings += 1
            if status == SAFEGUARD_EXHAUSTED:
                break
            change = _max_change(wn, w)
            change = max(change, _max_change(hn, h))
            _copy(wn, w)
            _copy(hn, h)
            _copy(Rn, R)
            records[t, 0] = F_new * scale4
            records[t, 1] = change
            records[t, 2] = eps
            records[t, 3] = _seqsum(w) + _seqsum(h)
            records[t, 4] = _min_entry(h, _min_entry(w, 1.0))
            done = t + 1
            if target >= 0.0 and F_new < target * F0:
                status = REACHED_TARGET
            elif change <= step_tol:
                status = CONVERGED_STEP
            elif fabs(F_new - F) <= value_tol * fabs(F):
                status = CONVERGED_VALUE
            F = F_new
            if status != RUNNING:
                break
    return done, status, eps, F, halvings
