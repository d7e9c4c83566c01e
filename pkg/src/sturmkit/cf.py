"""Continued fraction representation of the rotation number.

The rotation number is carried by its coefficient sequence ``[a_1, a_2, ...]``
rather than by a float.  Everything downstream (words, lengths, rotation
letters) is computed from the coefficients with exact integer arithmetic.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ConfigError, DepthError, PrecisionError

DEFAULT_DEPTH = 64
DEFAULT_PRECISION_BITS = 256

#: periodic coefficient patterns available by name
PRESETS = {
    "fibonacci": (1,),
    "golden": (1,),
    "silver": (2,),
    "one-two": (1, 2),
}


@dataclass(frozen=True)
class ContinuedFraction:
    coefficients: tuple[int, ...]
    source: str = field(default="coefficients", compare=False)

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) < 2:
            raise ConfigError(f"continued fraction depth must be >= 2, got {len(coeffs)}")
        for k, a in enumerate(coeffs, start=1):
            if isinstance(a, bool) or not isinstance(a, int) or a < 1:
                raise ConfigError(f"coefficient a_{k} = {a!r} is not a positive integer")
        # memo for convergents; not part of equality
        object.__setattr__(self, "_pq", None)

    @classmethod
    def periodic(cls, pattern: Sequence[int], depth: int = DEFAULT_DEPTH) -> "ContinuedFraction":
        pattern = tuple(int(a) for a in pattern)
        if not pattern:
            raise ConfigError("empty coefficient pattern")
        coeffs = tuple(pattern[k % len(pattern)] for k in range(depth))
        return cls(coeffs, source="periodic:" + ",".join(map(str, pattern)))

    @classmethod
    def preset(cls, name: str, depth: int = DEFAULT_DEPTH) -> "ContinuedFraction":
        try:
            pattern = PRESETS[name.lower()]
        except KeyError:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
        cf = cls.periodic(pattern, depth)
        object.__setattr__(cf, "source", "preset:" + name.lower())
        return cf

    @property
    def depth(self) -> int:
        return len(self.coefficients)

    def a(self, n: int) -> int:
        """Coefficient ``a_n`` (1-based)."""
        if not 1 <= n <= self.depth:
            raise DepthError(f"a_{n} requested but only {self.depth} coefficients are stored")
        return self.coefficients[n - 1]

    def _convergent_table(self):
        if self._pq is None:
            # p_{-1}=1, q_{-1}=0, p_0=0, q_0=1 since alpha = [0; a_1, a_2, ...]
            p = [1, 0]
            q = [0, 1]
            for a in self.coefficients:
                p.append(a * p[-1] + p[-2])
                q.append(a * q[-1] + q[-2])
            object.__setattr__(self, "_pq", (tuple(p), tuple(q)))
        return self._pq

    def pq(self, n: int) -> tuple[int, int]:
        """Numerator and denominator of the n-th convergent, ``0 <= n <= depth``."""
        if not 0 <= n <= self.depth:
            raise DepthError(f"convergent {n} outside 0..{self.depth}")
        p, q = self._convergent_table()
        return p[n + 1], q[n + 1]

    def enclosure(self, n: int) -> tuple[Fraction, Fraction]:
        """Open interval containing every irrational with these first n coefficients.

        The tail ``t = a_{n+1} + ...`` ranges over ``(1, inf)``, so alpha lies
        strictly between ``p_n/q_n`` and ``(p_n + p_{n-1})/(q_n + q_{n-1})``.
        """
        if not 1 <= n <= self.depth:
            raise DepthError(f"enclosure level {n} outside 1..{self.depth}")
        p1, q1 = self.pq(n)
        p0, q0 = self.pq(n - 1)
        x, y = Fraction(p1, q1), Fraction(p1 + p0, q1 + q0)
        return (x, y) if x < y else (y, x)

    def __str__(self):
        head = ",".join(map(str, self.coefficients[:8]))
        tail = ",..." if self.depth > 8 else ""
        return f"[{head}{tail}]"

    def to_json(self) -> list[int]:
        return list(self.coefficients)


def parse_coefficients(text: str, depth: int | None = None) -> ContinuedFraction:
    """Parse ``"1,1,1"`` or ``"1,2,..."``; a trailing ``...`` repeats the listed pattern."""
    parts = [t.strip() for t in text.strip().strip("[]").split(",") if t.strip()]
    periodic = bool(parts) and parts[-1] in ("...", "…")
    if periodic:
        parts = parts[:-1]
    try:
        coeffs = [int(t) for t in parts]
    except ValueError:
        raise ConfigError(f"malformed coefficient list {text!r}") from None
    for k, a in enumerate(coeffs, start=1):
        if a < 1:
            raise ConfigError(f"coefficient a_{k} = {a} violates a_k >= 1")
    if periodic:
        return ContinuedFraction.periodic(coeffs, depth or DEFAULT_DEPTH)
    if depth is not None:
        coeffs = coeffs[:depth]
    return ContinuedFraction(tuple(coeffs), source="coefficients")


# -- real number input ---------------------------------------------------------

_DECIMAL_RE = re.compile(r"^\s*[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\s*$")


def _mpf_to_fraction(raw) -> Fraction:
    sign, man, exp, _bc = raw
    if not man:
        if exp:
            raise PrecisionError("non-finite interval endpoint")
        return Fraction(0)
    value = Fraction(int(man)) * (Fraction(2) ** int(exp))
    return -value if sign else value


_IV_FUNCS = ("sqrt", "exp", "log", "sin", "cos", "tan", "atan", "cbrt")
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_interval(expr: str, prec: int):
    """Evaluate a small arithmetic expression in mpmath interval arithmetic."""
    from mpmath import iv

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            # decimal literals are taken at face value, not via binary float
            return iv.mpf(str(node.value)) if isinstance(node.value, float) else iv.mpf(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in ("pi", "e"):
            return iv.pi if node.id == "pi" else iv.e
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _IV_FUNCS and len(node.args) == 1 and not node.keywords):
            return getattr(iv, node.func.id)(ev(node.args[0]))
        raise ConfigError(f"unsupported expression element in {expr!r}")

    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError:
        raise ConfigError(f"cannot parse real number {expr!r}") from None
    old = iv.prec
    iv.prec = prec
    try:
        value = ev(tree)
    finally:
        iv.prec = old
    lo, hi = value._mpi_
    return _mpf_to_fraction(lo), _mpf_to_fraction(hi)


def enclose(x, prec: int = DEFAULT_PRECISION_BITS) -> tuple[Fraction, Fraction]:
    """Return a rational interval ``[lo, hi]`` certainly containing ``x``.

    * ``Fraction``/``int``: exact point interval.
    * ``float``: the binary value widened by half an ulp.
    * decimal string: the value widened by half a unit in the last digit.
    * other strings: evaluated as an expression (``"(sqrt(5)-1)/2"``) in
      interval arithmetic with ``prec`` bits.
    * an ``(lo, hi)`` pair of rationals is passed through.
    """
    if isinstance(x, tuple) and len(x) == 2:
        lo, hi = Fraction(x[0]), Fraction(x[1])
    elif isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        lo = hi = Fraction(x)
    elif isinstance(x, float):
        if not math.isfinite(x):
            raise ConfigError(f"non-finite input {x}")
        half_ulp = Fraction(math.ulp(x)) / 2
        lo, hi = Fraction(x) - half_ulp, Fraction(x) + half_ulp
    elif isinstance(x, str):
        if _DECIMAL_RE.match(x):
            try:
                d = Decimal(x.strip())
            except InvalidOperation:
                raise ConfigError(f"malformed decimal {x!r}") from None
            exponent = d.as_tuple().exponent
            half_unit = Fraction(1, 2) * Fraction(10) ** exponent
            lo, hi = Fraction(d) - half_unit, Fraction(d) + half_unit
        else:
            lo, hi = _eval_interval(x, prec)
    elif hasattr(x, "_mpi_"):
        lo, hi = (_mpf_to_fraction(e) for e in x._mpi_)
    elif hasattr(x, "_mpf_"):
        lo = hi = _mpf_to_fraction(x._mpf_)
    else:
        raise ConfigError(f"cannot interpret {x!r} as a real number")
    if lo > hi:
        lo, hi = hi, lo
    return lo, hi


def expand(x, depth: int = DEFAULT_DEPTH, prec: int = DEFAULT_PRECISION_BITS) -> ContinuedFraction:
    """Continued fraction expansion of a real number in (0, 1).

    The input is turned into an enclosing rational interval (see :func:`enclose`)
    and both endpoints are expanded together with exact arithmetic.  A
    coefficient is emitted only when every point of the interval shares it;
    otherwise :class:`PrecisionError` is raised.  Rational inputs terminate and
    raise as well once they run out of coefficients.
    """
    if depth < 2:
        raise ConfigError("depth must be >= 2")
    lo, hi = enclose(x, prec)
    if not (0 < lo and hi < 1):
        raise ConfigError(f"value must lie in (0, 1); enclosure is [{float(lo)}, {float(hi)}]")
    coeffs = []
    for k in range(1, depth + 1):
        if lo <= 0:
            what = "rational input terminated" if hi == 0 else "interval reaches zero"
            raise PrecisionError(
                f"{what} after {k - 1} coefficients; cannot determine a_{k} (requested depth {depth})")
        r_lo, r_hi = 1 / hi, 1 / lo
        a_lo, a_hi = math.floor(r_lo), math.floor(r_hi)
        if a_lo != a_hi:
            raise PrecisionError(
                f"a_{k} is ambiguous at working precision (between {a_lo} and {a_hi}); "
                f"only {k - 1} coefficients determined, {depth} requested")
        coeffs.append(a_lo)
        lo, hi = r_lo - a_lo, r_hi - a_lo
    return ContinuedFraction(tuple(coeffs), source=f"expanded:{x}")


def value(cf: ContinuedFraction, n: int) -> Fraction:
    """n-th convergent ``p_n/q_n`` as an exact rational, ``1 <= n <= depth``."""
    if not 1 <= n <= cf.depth:
        raise DepthError(f"convergent index {n} outside 1..{cf.depth}")
    p, q = cf.pq(n)
    return Fraction(p, q)


def bounded_density_profile(cf: ContinuedFraction) -> list[Fraction]:
    """Running means ``(1/n) * sum_{j<=n} a_j`` over the stored depth."""
    out = []
    total = 0
    for n, a in enumerate(cf.coefficients, start=1):
        total += a
        out.append(Fraction(total, n))
    return out


class LengthTable:
    """Word lengths ``|s_n|`` for ``n = -1 .. N``, indexed by n itself."""

    __slots__ = ("lengths", "N")

    def __init__(self, lengths: Iterable[int]):
        self.lengths = tuple(lengths)
        self.N = len(self.lengths) - 2

    def __getitem__(self, n: int) -> int:
        if not -1 <= n <= self.N:
            raise DepthError(f"|s_{n}| outside table range -1..{self.N}")
        return self.lengths[n + 1]

    def __len__(self):
        return len(self.lengths)

    def __iter__(self):
        return iter(self.lengths)

    def __repr__(self):
        return f"LengthTable({list(self.lengths)})"


def length_table(cf: ContinuedFraction, N: int) -> LengthTable:
    if N > cf.depth:
        raise DepthError(f"length table to level {N} needs {N} coefficients, only {cf.depth} stored")
    if N < -1:
        raise DepthError("N must be >= -1")
    lengths = [1, 1]
    for n in range(1, N + 1):
        if n == 1:
            lengths.append(cf.a(1))  # |s_1| = (a_1 - 1)|s_0| + |s_{-1}|
        else:
            lengths.append(cf.a(n) * lengths[-1] + lengths[-2])
    return LengthTable(lengths[: N + 2])


def word_length(cf: ContinuedFraction, n: int) -> int:
    """``|s_n|``; equals the convergent denominator ``q_n`` for n >= 0."""
    if n == -1:
        return 1
    return cf.pq(n)[1] if n >= 1 else 1


def level_for_length(cf: ContinuedFraction, length: int, minimum: int = 1) -> int:
    """Smallest ``n >= minimum`` with ``|s_n| >= length``."""
    n = max(minimum, -1)
    while word_length(cf, n) < length:
        n += 1
        if n > cf.depth:
            raise DepthError(f"no s_n with |s_n| >= {length} within depth {cf.depth}")
    return n
