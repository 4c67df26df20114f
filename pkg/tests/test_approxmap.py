import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from betaexp.approxmap import (PeriodicDigits, h_map, holder_check, holder_constant, holder_exponent,
                               in_H, is_golden_safe_cycle, project)
from betaexp.errors import NotInDomain
from betaexp.exactnum import log_bracket
from betaexp.expansion import digits, value_of


def test_project_examples(golden, two, three_halves):
    pv = project(PeriodicDigits((1,), ()), two, 1)
    assert pv.exact and pv.value_low == Fraction(1, 2)
    phi = golden.value
    pv = project((1, 0, 1, 0), golden, 4)
    assert pv.value_low == 1 / phi + phi ** -3
    assert pv.value_high - pv.value_low == phi ** -4 / (phi - 1)
    pv = project(digits(Fraction(2, 3), three_halves, 3), three_halves, 3)
    assert pv.exact and pv.value_low == Fraction(2, 3)


def test_in_H_examples(golden, two, three_halves):
    assert in_H(Fraction(2, 3), two, golden, 8)
    assert not in_H(Fraction(3, 4), two, golden, 2)
    assert in_H(Fraction(2, 3), two, three_halves, 3)


def test_h_map_examples(golden, two):
    assert h_map(Fraction(0), two, golden, 5).value_low == 0
    pv = h_map(Fraction(1, 2), two, golden, 1)
    assert pv.value_low == 1 / golden.value
    pv = h_map(Fraction(2, 3), two, golden, 20)
    # (10)^inf in base golden sums to 1
    assert pv.value_low <= 1 <= pv.value_high
    assert PeriodicDigits((), (1, 0)).value(golden) == 1


def test_h_map_outside_domain(golden, two):
    with pytest.raises(NotInDomain):
        h_map(Fraction(3, 4), two, golden, 4)


def test_holder_exponent_brackets_log_ratio(golden, two):
    lo, hi = holder_exponent(two, golden)
    assert lo <= hi and hi - lo < Fraction(1, 10 ** 30)
    assert abs(float(lo) - 0.6942419136306174) < 1e-15


def test_holder_constant_golden(golden):
    assert holder_constant(golden) == golden.value ** 3


def test_golden_safe_cycles():
    assert is_golden_safe_cycle((1, 0, 0))
    assert not is_golden_safe_cycle((1, 0, 1))
    assert not is_golden_safe_cycle((1, 0))
    assert not is_golden_safe_cycle((0, 1, 1))


def test_holder_check_detects_a_violation(golden, two):
    res = holder_check(Fraction(1), Fraction(0), Fraction(1, 2), Fraction(1, 2) + Fraction(1, 10 ** 9),
                       two, golden, golden.value ** 3)
    assert not res.holds


cycles = st.lists(st.integers(0, 1), min_size=1, max_size=8).filter(lambda c: is_golden_safe_cycle(tuple(c)))


@given(cycles, cycles, st.lists(st.integers(0, 1), max_size=3))
def test_holder_inequality_on_periodic_points(c1, c2, pre):
    from betaexp.expansion import Beta
    two, golden = Beta.from_spec("int:2"), Beta.golden()
    pre = tuple(pre)
    if pre and pre[-1] == 1 and c1[0] == 1:
        pre = pre[:-1] + (0,)
    p1, p2 = PeriodicDigits(pre, tuple(c1)), PeriodicDigits((), tuple(c2))
    x, y = p1.value(two), p2.value(two)
    if x >= 1 or y >= 1:
        return
    res = holder_check(p1.value(golden), p2.value(golden), x, y, two, golden, golden.value ** 3)
    assert res.holds


@given(st.lists(st.integers(0, 1), min_size=1, max_size=30), st.integers(1, 30))
def test_projection_bracket_contains_any_continuation(word, n):
    from betaexp.expansion import Beta
    golden = Beta.golden()
    pv = project(tuple(word), golden, n)
    rng = random.Random(len(word) * 31 + n)
    cont = tuple(word[:n]) + tuple(rng.randint(0, 1) for _ in range(20))
    v = value_of(cont, golden)
    assert pv.value_low <= v <= pv.value_high
