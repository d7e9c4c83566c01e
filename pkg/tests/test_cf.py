import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from sturmkit.cf import (ContinuedFraction, bounded_density_profile, enclose, expand,
                         length_table, level_for_length, parse_coefficients, value, word_length)
from sturmkit.errors import ConfigError, DepthError, PrecisionError


def mp_expand(expr, depth, dps=120):
    """Independent oracle: Euclid on a 120-digit float."""
    with mpmath.workdps(dps):
        x = mpmath.mpmathify(eval(expr, {"sqrt": mpmath.sqrt, "pi": mpmath.pi}))
        out = []
        for _ in range(depth):
            x = 1 / x
            a = int(mpmath.floor(x))
            out.append(a)
            x -= a
        return out


@pytest.mark.parametrize("expr,depth", [("(sqrt(5)-1)/2", 20), ("sqrt(2)-1", 10),
                                        ("pi-3", 12), ("sqrt(3)-1", 30)])
def test_expand_matches_high_precision_euclid(expr, depth):
    assert list(expand(expr, depth).coefficients) == mp_expand(expr, depth)


def test_golden_and_silver_examples():
    assert expand("(sqrt(5)-1)/2", 20).coefficients == (1,) * 20
    assert expand("sqrt(2)-1", 10).coefficients == (2,) * 10


@pytest.mark.parametrize("x", ["1/2", 0.5, Fraction(1, 2)])
def test_rational_input_is_a_precision_error(x):
    if x == "1/2":
        x = Fraction(1, 2)
    with pytest.raises(PrecisionError):
        expand(x, 8)


def test_short_decimal_cannot_supply_deep_expansion():
    with pytest.raises(PrecisionError, match="22 coefficients"):
        expand("0.6180339887", 32)
    assert expand("0.6180339887", 22).coefficients == (1,) * 22


def test_out_of_range_values():
    for bad in ("1.5", "-0.25", Fraction(0)):
        with pytest.raises(ConfigError):
            expand(bad, 5)


def test_float_enclosure_contains_the_float():
    lo, hi = enclose(0.1)
    assert lo < Fraction(0.1) < hi
    assert hi - lo == Fraction(math.ulp(0.1))


def test_expression_enclosure_is_tight_and_correct():
    lo, hi = enclose("sqrt(2)-1", prec=200)
    with mpmath.workdps(80):
        ref = mpmath.sqrt(2) - 1
        assert mpmath.mpf(lo.numerator) / lo.denominator <= ref <= mpmath.mpf(hi.numerator) / hi.denominator
    assert hi - lo < Fraction(1, 2 ** 190)


def test_value_and_lengths():
    fib = ContinuedFraction.preset("fibonacci")
    assert value(fib, 5) == Fraction(5, 8)
    assert list(length_table(fib, 6)) == [1, 1, 1, 2, 3, 5, 8, 13]
    silver = ContinuedFraction.preset("silver")
    assert [word_length(silver, n) for n in (1, 2, 3)] == [2, 5, 12]
    with pytest.raises(DepthError):
        length_table(ContinuedFraction((1, 2, 3)), 4)


def test_parse_coefficients():
    assert parse_coefficients("1,2,...", 6).coefficients == (1, 2, 1, 2, 1, 2)
    assert parse_coefficients("[3, 1, 4]").coefficients == (3, 1, 4)
    for bad in ("1,0,1", "1,x", "", "-1"):
        with pytest.raises(ConfigError):
            parse_coefficients(bad)


def test_presets_and_unknown_preset():
    assert ContinuedFraction.preset("one-two", 5).coefficients == (1, 2, 1, 2, 1)
    with pytest.raises(ConfigError):
        ContinuedFraction.preset("bronze")


def test_bounded_density_profile():
    cf = ContinuedFraction((1, 3, 2))
    assert bounded_density_profile(cf) == [Fraction(1), Fraction(2), Fraction(2)]


def test_level_for_length():
    fib = ContinuedFraction.preset("fibonacci")
    n = level_for_length(fib, 100)
    assert word_length(fib, n) > 100 >= word_length(fib, n - 1)


coeff_lists = st.lists(st.integers(1, 40), min_size=3, max_size=25)


@given(coeff_lists)
def test_round_trip_through_convergent(coeffs):
    cf = ContinuedFraction(tuple(coeffs))
    # [..., a, 1] and [..., a + 1] are the same rational; compare canonical forms
    canon = list(coeffs)
    if canon[-1] == 1:
        canon = canon[:-2] + [canon[-2] + 1]
    x = value(cf, len(coeffs))
    assert expand(x, len(canon)).coefficients == tuple(canon)
    with pytest.raises(PrecisionError):
        expand(x, len(canon) + 1)


@given(coeff_lists)
def test_convergent_determinant_and_lengths(coeffs):
    cf = ContinuedFraction(tuple(coeffs))
    for n in range(1, cf.depth + 1):
        p, q = cf.pq(n)
        p1, q1 = cf.pq(n - 1)
        assert p1 * q - p * q1 == (-1) ** n
        assert word_length(cf, n) == q


@given(coeff_lists)
def test_enclosures_nest(coeffs):
    cf = ContinuedFraction(tuple(coeffs))
    prev = None
    for n in range(1, cf.depth):
        lo, hi = cf.enclosure(n)
        assert lo < hi
        if prev is not None:
            assert prev[0] <= lo and hi <= prev[1]
        prev = (lo, hi)
    # the exact value of a deeper truncation lies inside every enclosure
    x = value(cf, cf.depth)
    for n in range(1, cf.depth - 1):
        lo, hi = cf.enclosure(n)
        assert lo <= x <= hi
