# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the Bell-diagonal recurrence.

Same signatures and results as ``qpa._pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log as _log

cnp.import_array()


cdef inline double _step(double a, double b, double c, double d,
                         double* out) noexcept nogil:
    cdef double s = a + b
    cdef double t = c + d
    cdef double n = s * s + t * t
    out[0] = (a * a + b * b) / n
    out[1] = 2.0 * c * d / n
    out[2] = (c * c + d * d) / n
    out[3] = 2.0 * a * b / n
    return n


def step_batch(double[:, ::1] pts):
    """Apply the identical-pair map to each row; returns (states, success_probs)."""
    cdef Py_ssize_t n = pts.shape[0], i
    out = np.empty((n, 4), dtype=np.float64)
    prob = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] p = prob
    with nogil:
        for i in range(n):
            p[i] = _step(pts[i, 0], pts[i, 1], pts[i, 2], pts[i, 3], &o[i, 0])
    return out, prob


def iterate_batch(double[:, ::1] pts, int max_iters, double fid_tol):
    """Iterate every row until 1 - A < fid_tol or max_iters steps.

    Returns (final_states, iterations, converged, min_fidelity, log_yield_units)
    where min_fidelity is the smallest A seen after the first step and
    log_yield_units is sum(log N_k) over the steps taken.
    """
    cdef Py_ssize_t n = pts.shape[0], i
    cdef int k
    cdef double buf[4]
    cdef double a, b, c, d, nk, lo, ly
    final = np.empty((n, 4), dtype=np.float64)
    iters = np.zeros(n, dtype=np.int64)
    conv = np.zeros(n, dtype=np.uint8)
    minf = np.empty(n, dtype=np.float64)
    logy = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] f = final
    cdef cnp.int64_t[::1] it = iters
    cdef cnp.uint8_t[::1] cv = conv
    cdef double[::1] mf = minf
    cdef double[::1] ly_ = logy
    with nogil:
        for i in range(n):
            a = pts[i, 0]; b = pts[i, 1]; c = pts[i, 2]; d = pts[i, 3]
            lo = a
            ly = 0.0
            k = 0
            if 1.0 - a < fid_tol:
                cv[i] = 1
            else:
                lo = 2.0
                while k < max_iters:
                    nk = _step(a, b, c, d, buf)
                    a = buf[0]; b = buf[1]; c = buf[2]; d = buf[3]
                    ly = ly + _log(nk)
                    k = k + 1
                    if a < lo:
                        lo = a
                    if 1.0 - a < fid_tol:
                        cv[i] = 1
                        break
            f[i, 0] = a; f[i, 1] = b; f[i, 2] = c; f[i, 3] = d
            it[i] = k
            mf[i] = lo
            ly_[i] = ly
    return final, iters, conv.astype(bool), minf, logy


def mixed_step_batch(double[:, ::1] first, double[:, ::1] second, double[::1] uniforms):
    """Two-pair map per row plus a sampled coincide/discard outcome.

    Row j succeeds iff uniforms[j] < N_j.  Returns (states, success_probs, success).
    """
    cdef Py_ssize_t m = first.shape[0], j
    cdef double a, b, c, d, a2, b2, c2, d2, nn
    out = np.empty((m, 4), dtype=np.float64)
    prob = np.empty(m, dtype=np.float64)
    ok = np.empty(m, dtype=np.uint8)
    cdef double[:, ::1] o = out
    cdef double[::1] p = prob
    cdef cnp.uint8_t[::1] s = ok
    with nogil:
        for j in range(m):
            a = first[j, 0]; b = first[j, 1]; c = first[j, 2]; d = first[j, 3]
            a2 = second[j, 0]; b2 = second[j, 1]; c2 = second[j, 2]; d2 = second[j, 3]
            nn = (a + b) * (a2 + b2) + (c + d) * (c2 + d2)
            o[j, 0] = (a * a2 + b * b2) / nn
            o[j, 1] = (c2 * d + c * d2) / nn
            o[j, 2] = (c * c2 + d * d2) / nn
            o[j, 3] = (a * b2 + a2 * b) / nn
            p[j] = nn
            s[j] = uniforms[j] < nn
    return out, prob, ok.astype(bool)
