from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from betaexp import exactnum
from betaexp.errors import DomainError, PrecisionExhausted
from betaexp.exactnum import Interval, Ordering, Quadratic, bracket, compare, floor, serialize, to_decimal

PHI = Quadratic(1, 1, 2, 5)


def test_floor_examples():
    assert floor(Fraction(7, 2)) == 3
    assert floor(PHI) == 1
    assert floor(Fraction(-1, 3)) == -1


def test_compare_examples():
    assert compare(Fraction(1, 2), Fraction(1, 2)) == Ordering.EQ
    assert compare(PHI, Fraction(8, 5)) == Ordering.GT
    pi = Interval.parse("pi")
    assert compare(pi, 3) == Ordering.GT


def test_to_decimal_examples():
    assert to_decimal(Fraction(1, 3), 4) == "0.3333"
    assert to_decimal(PHI, 5) == "1.61803"
    assert to_decimal(Fraction(0), 2) == "0.00"


def test_quadratic_normal_form():
    q = Quadratic(2, 2, 4, 5)
    assert (q.a, q.b, q.c, q.d) == (1, 1, 2, 5)
    with pytest.raises(DomainError):
        Quadratic(1, 1, 1, 4)  # not square-free
    assert Quadratic(3, 0, 6, 5) == Fraction(1, 2)


def test_golden_identities():
    assert PHI * PHI == PHI + 1
    assert 1 / PHI == PHI - 1
    assert PHI ** -2 == 2 - PHI
    assert abs(PHI - 2) == 2 - PHI


def test_mixing_square_roots_is_rejected():
    with pytest.raises(DomainError):
        PHI + Quadratic(0, 1, 1, 2)


def test_interval_equality_never_inferred():
    x = Interval.exact(Fraction(1, 3))
    with pytest.raises(PrecisionExhausted):
        compare(x, Fraction(1, 3), budget=256)


def test_interval_floor_of_integer_exhausts():
    # enclosures that always straddle 2 can never certify the floor
    two = Interval(lambda bits: (2 - Fraction(1, 2 ** (bits + 1)), 2 + Fraction(1, 2 ** (bits + 1))))
    with pytest.raises(PrecisionExhausted):
        floor(two, budget=256)


def test_interval_floor_with_exact_bounds():
    assert floor(Interval.exact(Fraction(2))) == 2


def test_serialize_forms():
    assert serialize(Fraction(3, 4)) == "3/4"
    assert serialize(PHI) == "(1+1√5)/2"


def test_budget_override():
    old = exactnum.get_budget()
    try:
        exactnum.set_budget(128)
        assert exactnum.get_budget() == 128
        with pytest.raises(DomainError):
            exactnum.set_budget(8)
    finally:
        exactnum.set_budget(old)


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=400)


@given(rationals, rationals)
def test_rational_compare_matches_python(x, y):
    assert compare(x, y) == Ordering((x > y) - (x < y))


@given(st.integers(-40, 40), st.integers(-40, 40), st.integers(1, 30), st.sampled_from([2, 3, 5, 7, 13]))
def test_quadratic_bracket_contains_mpmath_value(a, b, c, d):
    q = Quadratic(a, b, c, d)
    lo, hi = bracket(q, 80)
    mpmath.mp.prec = 200
    v = (mpmath.mpf(a) + b * mpmath.sqrt(d)) / c
    assert mpmath.mpf(lo.numerator) / lo.denominator <= v + mpmath.mpf(2) ** -150
    assert v <= mpmath.mpf(hi.numerator) / hi.denominator + mpmath.mpf(2) ** -150
    assert hi - lo <= Fraction(1, 2 ** 80)


@given(st.integers(-40, 40), st.integers(-40, 40), st.integers(1, 30), st.sampled_from([2, 3, 5, 7]))
def test_quadratic_floor_matches_high_precision(a, b, c, d):
    q = Quadratic(a, b, c, d)
    mpmath.mp.prec = 300
    v = (mpmath.mpf(a) + b * mpmath.sqrt(d)) / c
    assert floor(q) == int(mpmath.floor(v))


@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 10),
       st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 10))
def test_quadratic_field_axioms(a, b, c, e, f, g):
    x, y = Quadratic(a, b, c, 5), Quadratic(e, f, g, 5)
    assert (x + y) - y == x
    assert x * y == y * x
    if y != 0:
        assert (x / y) * y == x


@given(st.fractions(min_value=0, max_value=10, max_denominator=1000), st.integers(1, 12))
def test_to_decimal_truncation_error(x, digits):
    s = to_decimal(x, digits)
    assert abs(Fraction(s) - x) <= Fraction(1, 2 * 10 ** digits)
