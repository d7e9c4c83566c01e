"""Transfer matrices ``M(lam, E, w) = T(w_n) ... T(w_1)`` in overflow-safe form.

A product is stored as a unit-scale matrix ``m`` (largest entry magnitude in
``[0.5, 1)``) together with ``log_scale`` such that the true product equals
``exp(log_scale) * m``.  Rescaling uses exact powers of two, so it adds no
rounding error of its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .cf import ContinuedFraction
from .errors import ConfigError, DepthError
from .words import Word

UNIT_ROUNDOFF = 2.0 ** -53
#: per-multiply constant of the first-order normwise error model (complex 2x2)
_MULT_ERR = 8 * UNIT_ROUNDOFF
RENORM_STRIDE = 32


def local_matrix(lam: float, E: complex, a: int) -> np.ndarray:
    if a not in (0, 1):
        raise ConfigError(f"letter must be 0 or 1, got {a!r}")
    return np.array([[E - lam * a, -1.0], [1.0, 0.0]], dtype=np.complex128)


def _unit_scale(m: np.ndarray) -> tuple[np.ndarray, float]:
    mx = float(np.max(np.abs(m)))
    if mx == 0.0 or not math.isfinite(mx):
        return m, 0.0
    e = math.frexp(mx)[1]
    return m * math.ldexp(1.0, -e), e * math.log(2.0)


def norm2x2(m: np.ndarray) -> float:
    """Largest singular value of a 2x2 matrix (closed form)."""
    s = float(np.sum(np.abs(m) ** 2))
    ad = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return 0.5 * (math.sqrt(s + 2.0 * ad) + math.sqrt(max(s - 2.0 * ad, 0.0)))


@dataclass(frozen=True)
class TransferProduct:
    """Factored 2x2 product; compose with ``later @ earlier``.

    ``error_bound`` is a first-order bound on the normwise rounding error of
    ``m`` relative to the product of the factor norms.
    """

    m: np.ndarray
    log_scale: float = 0.0
    length: int = 0
    error_bound: float = 0.0
    _lognorm: float = field(default=math.nan, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=np.complex128).reshape(2, 2)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "TransferProduct":
        return cls(np.eye(2, dtype=np.complex128), 0.0, 0, 0.0)

    @classmethod
    def from_matrix(cls, m, length: int = 1) -> "TransferProduct":
        unit, ls = _unit_scale(np.asarray(m, dtype=np.complex128))
        return cls(unit, ls, length, 0.0)

    def __matmul__(self, other: "TransferProduct") -> "TransferProduct":
        if not isinstance(other, TransferProduct):
            return NotImplemented
        unit, ls = _unit_scale(self.m @ other.m)
        return TransferProduct(unit, self.log_scale + other.log_scale + ls,
                               self.length + other.length,
                               self.error_bound + other.error_bound + _MULT_ERR)

    def power(self, k: int) -> "TransferProduct":
        if k < 0:
            raise ValueError("negative power")
        result = TransferProduct.identity()
        base = self
        while k:
            if k & 1:
                result = base @ result
            k >>= 1
            if k:
                base = base @ base
        return result

    def log_norm(self) -> float:
        """``ln ||M||`` with the operator (spectral) norm."""
        return self.log_scale + math.log(norm2x2(self.m))

    def true_matrix(self) -> np.ndarray:
        """``exp(log_scale) * m``; overflows for long hyperbolic products."""
        return self.m * math.exp(self.log_scale)

    def det(self) -> complex:
        m = self.m
        d = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        return complex(d * math.exp(2.0 * self.log_scale))

    def det_error(self) -> float:
        """``|det M - 1| / max(1, |M00 M11| + |M01 M10|)`` evaluated at true scale.

        When the product terms stay below one this is the plain determinant
        error; for exponentially large products it is the error relative to
        the terms whose cancellation forms the determinant.
        """
        m = self.m
        terms = abs(m[0, 0] * m[1, 1]) + abs(m[0, 1] * m[1, 0])
        d = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        target = math.exp(-2.0 * self.log_scale)  # may underflow to 0
        return abs(d - target) / max(terms, target)

    def trace(self) -> complex:
        return complex((self.m[0, 0] + self.m[1, 1]) * math.exp(self.log_scale))

    def log_abs_trace(self) -> float:
        t = abs(self.m[0, 0] + self.m[1, 1])
        return -math.inf if t == 0 else math.log(t) + self.log_scale

    def to_json(self) -> dict:
        return {
            "matrix": [[float(z.real), float(z.imag)] for z in self.m.ravel()],
            "logScale": self.log_scale,
            "length": self.length,
            "errorBound": self.error_bound,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TransferProduct":
        m = np.array([complex(re, im) for re, im in d["matrix"]]).reshape(2, 2)
        return cls(m, float(d["logScale"]), int(d["length"]), float(d.get("errorBound", 0.0)))


def _letters(w) -> np.ndarray:
    if isinstance(w, Word):
        return w.to_array()
    return np.ascontiguousarray(w, dtype=np.uint8)


def word_product(lam: float, E: complex, w: Word, backend=None) -> TransferProduct:
    """``M(lam, E, w)``; the first letter of ``w`` acts first."""
    k = backend or kernels
    E = complex(E)
    if not (math.isfinite(lam) and math.isfinite(E.real) and math.isfinite(E.imag)):
        raise ConfigError("non-finite coupling or energy")
    letters = _letters(w)
    if letters.size == 0:
        return TransferProduct.identity()
    m, ls = k.product(letters, float(lam), E, RENORM_STRIDE)
    return TransferProduct(np.array(m).reshape(2, 2), ls, int(letters.size),
                           _MULT_ERR * letters.size)


def reversed_product(lam: float, E: complex, w: Word, backend=None) -> TransferProduct:
    return word_product(lam, E, w.reverse(), backend)


def log_norm(p: TransferProduct) -> float:
    return p.log_norm()


def prefix_log_norms(lam: float, E: complex, w: Word, checkpoints, backend=None) -> np.ndarray:
    """``ln ||M(w_1 ... w_N)||`` for each N in ``checkpoints`` (one pass)."""
    k = backend or kernels
    cps = np.ascontiguousarray(checkpoints, dtype=np.int64)
    order = np.argsort(cps, kind="stable")
    out = np.empty(cps.size)
    out[order] = k.prefix_lognorms(_letters(w), float(lam), complex(E), cps[order], RENORM_STRIDE)
    return out


def sn_products(lam: float, E: complex, cf: ContinuedFraction, n: int) -> list[TransferProduct]:
    """``[M(s_{-1}), M(s_0), ..., M(s_n)]`` via ``M(s_k) = M(s_{k-2}) M(s_{k-1})^{a_k}``."""
    if n > cf.depth:
        raise DepthError(f"s_{n} needs {n} coefficients, only {cf.depth} stored")
    E = complex(E)
    one = TransferProduct(local_matrix(lam, E, 1), 0.0, 1, 0.0)
    zero = TransferProduct(local_matrix(lam, E, 0), 0.0, 1, 0.0)
    table = [one, zero]
    for k in range(1, n + 1):
        if k == 1:
            table.append(one @ zero.power(cf.a(1) - 1))
        else:
            table.append(table[-2] @ table[-1].power(cf.a(k)))
    return table


def sn_product(lam: float, E: complex, cf: ContinuedFraction, n: int) -> TransferProduct:
    if n < -1:
        raise DepthError("n must be >= -1")
    return sn_products(lam, E, cf, n)[n + 1]


# -- vectorised over energies ---------------------------------------------------

def _batch_mul(a, la, b, lb):
    c = np.einsum("kij,kjl->kil", a, b)
    mx = np.max(np.abs(c).reshape(len(c), -1), axis=1)
    mx[mx == 0] = 1.0
    _, e = np.frexp(mx)
    c *= np.ldexp(1.0, -e)[:, None, None]
    return c, la + lb + e * math.log(2.0)


def _batch_pow(a, la, k):
    res = np.broadcast_to(np.eye(2, dtype=np.complex128), a.shape).copy()
    lres = np.zeros(len(a))
    while k:
        if k & 1:
            res, lres = _batch_mul(a, la, res, lres)
        k >>= 1
        if k:
            a, la = _batch_mul(a, la, a, la)
    return res, lres


def sn_log_abs_traces(lam: float, energies, cf: ContinuedFraction, n: int) -> np.ndarray:
    """``ln |tr M(lam, E, s_n)|`` for an array of energies (real or complex)."""
    if n > cf.depth:
        raise DepthError(f"s_{n} needs {n} coefficients, only {cf.depth} stored")
    E = np.asarray(energies, dtype=np.complex128).ravel()
    K = E.size
    t1 = np.zeros((K, 2, 2), np.complex128)
    t1[:, 0, 0] = E - lam
    t1[:, 0, 1] = -1.0
    t1[:, 1, 0] = 1.0
    t0 = t1.copy()
    t0[:, 0, 0] = E
    zeros = np.zeros(K)
    prev2, l2 = t1, zeros  # s_{-1}
    prev1, l1 = t0, zeros  # s_0
    for k in range(1, n + 1):
        if k == 1:
            p, lp = _batch_pow(t0, zeros, cf.a(1) - 1)
            cur, lc = _batch_mul(t1, zeros, p, lp)
        else:
            p, lp = _batch_pow(prev1, l1, cf.a(k))
            cur, lc = _batch_mul(prev2, l2, p, lp)
        prev2, l2, prev1, l1 = prev1, l1, cur, lc
    if n == -1:
        prev1, l1 = t1, zeros
    tr = np.abs(prev1[:, 0, 0] + prev1[:, 1, 1])
    with np.errstate(divide="ignore"):
        return np.log(tr) + l1
