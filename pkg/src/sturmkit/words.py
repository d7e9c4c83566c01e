"""Binary words, the s_n recursion, the limit word c_alpha and rotation words."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .cf import ContinuedFraction, word_length
from .errors import ConfigError, DepthError, PrecisionError, ResourceError

#: default cap on the number of letters a single word may hold
MAX_WORD_LENGTH = 1 << 27

_PACK_MAGIC = b"STRW"
_PACK_HEADER = struct.Struct("<4sBQ")  # magic, format version, letter count


class Word:
    """Immutable finite word over ``{0, 1}``.

    Letters are held as ASCII ``b"0"``/``b"1"`` bytes: random access is O(1)
    and factor search runs through ``bytes.find``.
    """

    __slots__ = ("_data", "_hash")

    def __init__(self, letters: "str | bytes | Iterable[int] | Word" = b""):
        if isinstance(letters, Word):
            data = letters._data
        elif isinstance(letters, (bytes, bytearray, memoryview)):
            data = bytes(letters)
        elif isinstance(letters, str):
            data = letters.encode("ascii", errors="strict") if letters.isascii() else None
            if data is None:
                raise ConfigError("word letters must be 0 or 1")
        elif isinstance(letters, np.ndarray):
            arr = np.asarray(letters, dtype=np.uint8)
            if arr.size and arr.max() > 1:
                raise ConfigError("word letters must be 0 or 1")
            data = (arr + 48).tobytes()
        else:
            data = bytes(48 + int(c) for c in letters)
        if data.strip(b"01"):
            raise ConfigError("word letters must be 0 or 1")
        self._data = data
        self._hash = None

    @classmethod
    def _raw(cls, data: bytes) -> "Word":
        w = cls.__new__(cls)
        w._data = data
        w._hash = None
        return w

    @property
    def data(self) -> bytes:
        return self._data

    def __len__(self):
        return len(self._data)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Word._raw(self._data[idx])
        return self._data[idx] - 48

    def __iter__(self):
        return (c - 48 for c in self._data)

    def __add__(self, other: "Word") -> "Word":
        if not isinstance(other, Word):
            return NotImplemented
        return Word._raw(self._data + other._data)

    def __mul__(self, k: int) -> "Word":
        return Word._raw(self._data * k)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Word):
            return self._data == other._data
        if isinstance(other, str):
            return self._data == other.encode("ascii", "replace")
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._data)
        return self._hash

    def __lt__(self, other: "Word"):
        return (len(self), self._data) < (len(other), other._data)

    def __str__(self):
        return self._data.decode("ascii")

    def __repr__(self):
        s = str(self)
        return f"Word({s!r})" if len(s) <= 40 else f"Word({s[:37]!r}... len={len(s)})"

    def find(self, other: "Word | str", start: int = 0) -> int:
        return self._data.find(_letters_of(other), start)

    def __contains__(self, other: "Word | str") -> bool:
        return _letters_of(other) in self._data

    def startswith(self, other: "Word | str") -> bool:
        return self._data.startswith(_letters_of(other))

    def endswith(self, other: "Word | str") -> bool:
        return self._data.endswith(_letters_of(other))

    def reverse(self) -> "Word":
        return Word._raw(self._data[::-1])

    def is_palindrome(self) -> bool:
        return self._data == self._data[::-1]

    def count_ones(self) -> int:
        return self._data.count(b"1")

    def to_array(self) -> np.ndarray:
        """Letters as a fresh ``uint8`` array of 0/1 values."""
        return np.frombuffer(self._data, dtype=np.uint8) - np.uint8(48)

    def to_packed(self) -> bytes:
        """Bit-packed serialization with a small header (magic, version, length)."""
        bits = np.packbits(self.to_array()) if len(self) else np.zeros(0, np.uint8)
        return _PACK_HEADER.pack(_PACK_MAGIC, 1, len(self)) + bits.tobytes()

    @classmethod
    def from_packed(cls, blob: bytes) -> "Word":
        if len(blob) < _PACK_HEADER.size:
            raise ConfigError("packed word is shorter than its header")
        magic, version, n = _PACK_HEADER.unpack_from(blob)
        if magic != _PACK_MAGIC or version != 1:
            raise ConfigError("not a packed word (bad magic or version)")
        body = np.frombuffer(blob, dtype=np.uint8, offset=_PACK_HEADER.size)
        if body.size * 8 < n:
            raise ConfigError("packed word body is truncated")
        return cls._raw((np.unpackbits(body)[:n] + 48).tobytes())

    @classmethod
    def load(cls, raw: bytes) -> "Word":
        """Read either the packed binary format or an ASCII 0/1 string."""
        if raw.startswith(_PACK_MAGIC):
            return cls.from_packed(raw)
        return cls(raw.strip())


EMPTY = Word._raw(b"")


def _letters_of(w) -> bytes:
    return w._data if isinstance(w, Word) else Word(w)._data


def reverse(w: Word) -> Word:
    return w.reverse()


@dataclass(frozen=True)
class RotationParams:
    cf: ContinuedFraction
    theta: Fraction = Fraction(0)
    lam: float = 1.0

    def __post_init__(self):
        theta = to_rational(self.theta)
        if not 0 <= theta < 1:
            raise ConfigError(f"theta must lie in [0, 1), got {self.theta}")
        object.__setattr__(self, "theta", theta)


def to_rational(x) -> Fraction:
    """Decimal strings and floats are converted exactly; no rounding is applied."""
    if isinstance(x, Fraction):
        return x
    try:
        return Fraction(x.strip()) if isinstance(x, str) else Fraction(x)
    except (ValueError, TypeError):
        raise ConfigError(f"cannot read {x!r} as a rational phase") from None


# -- s_n ----------------------------------------------------------------------

def _check_level(cf: ContinuedFraction, n: int):
    if n < -1:
        raise DepthError(f"s_{n} is undefined (n >= -1)")
    if n > cf.depth:
        raise DepthError(f"s_{n} needs {n} coefficients, only {cf.depth} stored")


@lru_cache(maxsize=128)
def _sn_bytes(coeffs: tuple[int, ...], n: int) -> bytes:
    if n == -1:
        return b"1"
    if n == 0:
        return b"0"
    if n == 1:
        return b"0" * (coeffs[0] - 1) + b"1"
    return _sn_bytes(coeffs, n - 1) * coeffs[n - 1] + _sn_bytes(coeffs, n - 2)


def build_sn(cf: ContinuedFraction, n: int, budget: int = MAX_WORD_LENGTH) -> Word:
    """The word ``s_n`` with ``s_{-1}=1``, ``s_0=0``, ``s_1=0^{a_1-1}1`` and
    ``s_n = s_{n-1}^{a_n} s_{n-2}``."""
    _check_level(cf, n)
    size = word_length(cf, n)
    if size > budget:
        raise ResourceError(f"|s_{n}| = {size} exceeds the word budget of {budget} letters")
    # only a_1..a_n influence s_n; keying on them shares the cache across depths
    return Word._raw(_sn_bytes(cf.coefficients[: max(n, 0)], n))


def c_prefix(cf: ContinuedFraction, length: int, budget: int = MAX_WORD_LENGTH) -> Word:
    """The first ``length`` letters of ``c_alpha = lim s_n``."""
    if length < 0:
        raise ConfigError("prefix length must be >= 0")
    if length > budget:
        raise ResourceError(f"prefix of {length} letters exceeds the word budget of {budget}")
    n = 1
    while word_length(cf, n) < length:
        n += 1
        if n > cf.depth:
            raise DepthError(
                f"c_alpha prefix of length {length} exceeds |s_{cf.depth}| at stored depth")
    return build_sn(cf, n, budget)[:length]


def palindrome_factor(cf: ContinuedFraction, n: int) -> tuple[Word, Word]:
    """Split ``s_n = pi_n . tail`` with tail ``10`` (n even) or ``01`` (n odd)."""
    if n < 2:
        raise ConfigError(f"palindromic factorization needs n >= 2, got {n}")
    s = build_sn(cf, n)
    tail = Word._raw(b"10" if n % 2 == 0 else b"01")
    pi = s[:-2]
    if not s.endswith(tail) or not pi.is_palindrome():
        # would contradict the classical structure of standard words
        from .errors import InternalConsistencyError
        raise InternalConsistencyError(f"s_{n} does not factor as palindrome + {tail}")
    return pi, tail


def scan_level(cf: ContinuedFraction, ell: int) -> int:
    """Smallest ``n >= 2`` with ``|s_n| > ell``; every factor of length ell
    then occurs in ``s_{n+2}``."""
    n = 2
    while word_length(cf, n) <= ell:
        n += 1
    if n + 2 > cf.depth:
        raise DepthError(f"factors of length {ell} need s_{n + 2}; only depth {cf.depth} stored")
    return n


def factors_of(w: Word, ell: int) -> set[Word]:
    data = w.data
    return {Word._raw(data[i:i + ell]) for i in range(len(data) - ell + 1)}


def subwords(cf: ContinuedFraction, ell: int) -> set[Word]:
    """All length-``ell`` words of the Sturmian language."""
    if ell < 1:
        raise ConfigError("factor length must be >= 1")
    n = scan_level(cf, ell)
    return factors_of(build_sn(cf, n + 2), ell)


# -- rotation words -------------------------------------------------------------

def _floors(cf: ContinuedFraction, theta: Fraction, ks: range, K: int):
    """floor(k*alpha + theta) for k in ks if decided at enclosure level K.

    Returns a list with ``None`` where the enclosure of alpha still straddles
    an integer.
    """
    lo, hi = cf.enclosure(K)
    # common denominators keep everything in integers
    den = lo.denominator * hi.denominator * theta.denominator
    lo_n = lo.numerator * hi.denominator * theta.denominator
    hi_n = hi.numerator * lo.denominator * theta.denominator
    th_n = theta.numerator * lo.denominator * hi.denominator
    out = []
    for k in ks:
        if k == 0:
            out.append(th_n // den)
            continue
        a = (k * lo_n + th_n) // den
        b = (k * hi_n + th_n) // den
        # k*alpha + theta lies strictly between the two endpoint values
        out.append(a if a == b else None)
    return out


def rotation_floors(cf: ContinuedFraction, theta: Fraction, start: int, stop: int) -> list[int]:
    """Exact ``floor(k*alpha + theta)`` for ``start <= k < stop``."""
    ks = range(start, stop)
    width = max(abs(start), abs(stop)) + 1
    K = 1
    while K < cf.depth and cf.pq(K)[1] <= width:
        K += 1
    vals = _floors(cf, theta, ks, K)
    pending = [i for i, v in enumerate(vals) if v is None]
    while pending and K < cf.depth:
        K = min(cf.depth, K + 2)
        redo = _floors(cf, theta, [ks[i] for i in pending], K)
        for i, v in zip(pending, redo):
            vals[i] = v
        pending = [i for i in pending if vals[i] is None]
    if pending:
        k = ks[pending[0]]
        raise PrecisionError(
            f"floor({k}*alpha + theta) undecidable with {cf.depth} coefficients "
            f"({len(pending)} ambiguous positions)")
    return vals


def rotation_word(params: RotationParams, m: int, M: int) -> Word:
    """Letters ``v(n) = chi_[1-alpha,1)(n*alpha + theta mod 1)`` for ``m <= n <= M``.

    Uses the identity ``v(n) = floor((n+1)alpha + theta) - floor(n*alpha + theta)``
    and exact rational enclosures of alpha, so boundary cases are decided
    exactly or reported.
    """
    if M < m:
        return EMPTY
    try:
        floors = rotation_floors(params.cf, params.theta, m, M + 2)
    except PrecisionError as exc:
        raise PrecisionError(f"rotation letter undecidable in [{m}, {M}]: {exc}") from None
    f = np.array(floors, dtype=object)
    letters = (f[1:] - f[:-1]).astype(np.uint8)
    return Word._raw((letters + 48).tobytes())
