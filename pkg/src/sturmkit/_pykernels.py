"""Pure-Python transfer-matrix kernels (fallback for ``_ckernels``)."""
import math

import numpy as np

LN2 = math.log(2.0)


def _rescale(m):
    mx = max(abs(z) for z in m)
    if mx == 0.0 or not math.isfinite(mx):
        return m, 0
    e = math.frexp(mx)[1]
    f = math.ldexp(1.0, -e)
    return [z * f for z in m], e


def _lognorm(m, log_scale):
    m00, m01, m10, m11 = m
    s = abs(m00) ** 2 + abs(m01) ** 2 + abs(m10) ** 2 + abs(m11) ** 2
    ad = abs(m00 * m11 - m01 * m10)
    q = max(s - 2.0 * ad, 0.0)
    return math.log(0.5 * (math.sqrt(s + 2.0 * ad) + math.sqrt(q))) + log_scale


def _stride(lam, E, stride):
    g = abs(E) + abs(lam) + 2.0  # bound on per-letter growth, kept above 1
    cap = int(150.0 / math.log10(g))
    return max(1, min(cap, stride))


def product(letters, lam, E, stride=32):
    E = complex(E)
    c0, c1 = E, E - lam
    m00, m01, m10, m11 = 1 + 0j, 0j, 0j, 1 + 0j
    ex = 0
    st = _stride(lam, E, stride)
    k = 0
    for a in np.asarray(letters).tolist():
        c = c1 if a else c0
        m00, m01, m10, m11 = c * m00 - m10, c * m01 - m11, m00, m01
        k += 1
        if k == st:
            (m00, m01, m10, m11), d = _rescale((m00, m01, m10, m11))
            ex += d
            k = 0
    m = (m00, m01, m10, m11)
    if len(letters):
        m, d = _rescale(m)
        ex += d
    return tuple(m), ex * LN2


def prefix_lognorms(letters, lam, E, checkpoints, stride=32):
    E = complex(E)
    cps = np.asarray(checkpoints, dtype=np.int64)
    letters = np.asarray(letters)
    if cps.size and (cps[-1] > letters.size or cps[0] < 0):
        raise ValueError("checkpoint outside the word")
    if np.any(np.diff(cps) < 0):
        raise ValueError("checkpoints must be sorted")
    out = np.empty(cps.size, dtype=np.float64)
    c0, c1 = E, E - lam
    m = [1 + 0j, 0j, 0j, 1 + 0j]
    ex = 0
    st = _stride(lam, E, stride)
    k = 0
    j = 0
    cps_list = cps.tolist()
    while j < len(cps_list) and cps_list[j] == 0:
        out[j] = _lognorm(m, ex * LN2)
        j += 1
    for i, a in enumerate(letters.tolist()):
        if j >= len(cps_list):
            break
        c = c1 if a else c0
        m = [c * m[0] - m[2], c * m[1] - m[3], m[0], m[1]]
        k += 1
        if k == st:
            m, d = _rescale(m)
            ex += d
            k = 0
        while j < len(cps_list) and cps_list[j] == i + 1:
            out[j] = _lognorm(m, ex * LN2)
            j += 1
    return out
