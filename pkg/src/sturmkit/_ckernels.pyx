# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transfer-matrix kernels.

Same contract as ``_pykernels``: the running product of
``T(a) = [[E - lam*a, -1], [1, 0]]`` over a 0/1 letter array, applied
left-to-right in time (letter 0 first), kept as a unit-scale matrix times
``exp(log_scale)``.  Rescaling is by exact powers of two.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport frexp, ldexp, log, sqrt, fabs, isfinite

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline int _rescale(double complex* m) noexcept nogil:
    """Scale m by a power of two so that max |entry| lies in [0.5, 1); return the
    binary exponent removed."""
    cdef double mx = cabs2(m[0])
    cdef double t, f
    cdef int e
    cdef int i
    for i in range(1, 4):
        t = cabs2(m[i])
        if t > mx:
            mx = t
    if mx == 0.0 or not isfinite(mx):
        return 0
    frexp(sqrt(mx), &e)
    f = ldexp(1.0, -e)
    for i in range(4):
        m[i] = m[i] * f
    return e


cdef inline double _lognorm(double complex* m, double log_scale) noexcept nogil:
    cdef double s = cabs2(m[0]) + cabs2(m[1]) + cabs2(m[2]) + cabs2(m[3])
    cdef double complex d = m[0] * m[3] - m[1] * m[2]
    cdef double ad = sqrt(cabs2(d))
    cdef double p = s + 2.0 * ad
    cdef double q = s - 2.0 * ad
    if q < 0.0:
        q = 0.0
    return log(0.5 * (sqrt(p) + sqrt(q))) + log_scale


cdef int _stride(double lam, double complex E, int stride) noexcept nogil:
    # growth per letter is at most (|E| + |lam| + 1); keep stride steps below 1e150
    # the extra 1 keeps log(g) away from zero
    cdef double g = sqrt(cabs2(E)) + fabs(lam) + 2.0
    cdef int cap = <int>(150.0 / (log(g) / log(10.0)))
    if cap < 1:
        cap = 1
    return cap if cap < stride else stride


def product(const unsigned char[::1] letters, double lam, double complex E, int stride=32):
    """Return ``((m00, m01, m10, m11), log_scale)`` for the full word."""
    cdef double complex m[4]
    cdef double complex c0 = E
    cdef double complex c1 = E - lam
    cdef double complex c, n00, n01
    # exponents are summed as integers; a float running sum of e*ln2 drifts by
    # about one ulp of the total per rescale
    cdef long long ex = 0
    cdef Py_ssize_t i, n = letters.shape[0]
    cdef int k = 0
    cdef int st = _stride(lam, E, stride)
    m[0] = 1.0; m[1] = 0.0; m[2] = 0.0; m[3] = 1.0
    with nogil:
        for i in range(n):
            c = c1 if letters[i] else c0
            n00 = c * m[0] - m[2]
            n01 = c * m[1] - m[3]
            m[2] = m[0]
            m[3] = m[1]
            m[0] = n00
            m[1] = n01
            k += 1
            if k == st:
                ex += _rescale(m)
                k = 0
        if n:
            ex += _rescale(m)
    return (m[0], m[1], m[2], m[3]), ex * LN2


def prefix_lognorms(const unsigned char[::1] letters, double lam, double complex E,
                    const long long[::1] checkpoints, int stride=32):
    """``ln||M(w_1..w_N)||`` for every N in the sorted ``checkpoints``."""
    cdef Py_ssize_t ncp = checkpoints.shape[0]
    out_arr = np.empty(ncp, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double complex m[4]
    cdef double complex c0 = E
    cdef double complex c1 = E - lam
    cdef double complex c, n00, n01
    cdef long long ex = 0
    cdef Py_ssize_t i = 0, j = 0, n = letters.shape[0]
    cdef long long target
    cdef int k = 0
    cdef int st = _stride(lam, E, stride)
    if ncp and (checkpoints[ncp - 1] > n or checkpoints[0] < 0):
        raise ValueError("checkpoint outside the word")
    for j in range(1, ncp):
        if checkpoints[j] < checkpoints[j - 1]:
            raise ValueError("checkpoints must be sorted")
    m[0] = 1.0; m[1] = 0.0; m[2] = 0.0; m[3] = 1.0
    with nogil:
        j = 0
        while j < ncp and checkpoints[j] == 0:
            out[j] = _lognorm(m, 0.0)
            j += 1
        for i in range(n):
            if j >= ncp:
                break
            c = c1 if letters[i] else c0
            n00 = c * m[0] - m[2]
            n01 = c * m[1] - m[3]
            m[2] = m[0]
            m[3] = m[1]
            m[0] = n00
            m[1] = n01
            k += 1
            if k == st:
                ex += _rescale(m)
                k = 0
            target = i + 1
            while j < ncp and checkpoints[j] == target:
                out[j] = _lognorm(m, ex * LN2)
                j += 1
    return out_arr
