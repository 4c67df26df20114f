import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from betaexp.errors import DomainError
from betaexp.phi import PhiFunction, dimension_target, liminf_ratio


def test_liminf_examples():
    assert liminf_ratio(PhiFunction.parse("linear:2")).value == 2
    assert liminf_ratio(PhiFunction.parse("power:1,1/2")).value == 0
    assert liminf_ratio(PhiFunction.parse("nlog:1,1")).value == 0


def test_dimension_target():
    assert dimension_target(PhiFunction.parse("linear:1")) == Fraction(1, 2)
    assert dimension_target(PhiFunction.parse("power:1,2")) == 0


def test_parse_errors():
    for bad in ("cubic:1", "power:1", "linear:1|wat", "table:"):
        with pytest.raises(DomainError):
            PhiFunction.parse(bad)


def test_modifiers():
    f = PhiFunction.parse("power:1,1/2|ceil+1")
    assert f.modifiers == ("ceil", "+1")
    assert f.floor(10) == 5 and f.floor(16) == 5
    assert PhiFunction.parse("linear:3|minus_n").exact(7) == 14


def test_table_phi():
    t = PhiFunction.parse("table:1,2,4,8")
    assert t.exact(3) == 4
    with pytest.raises(DomainError):
        t.exact(5)
    r = liminf_ratio(t, horizon=10)
    assert not r.exact


def test_exact_square_roots():
    f = PhiFunction.parse("power:1,1/2")
    assert f.exact(49) == 7 and f.exact(50) is None


def test_small_horizon_rejected():
    with pytest.raises(DomainError):
        liminf_ratio(PhiFunction.parse("linear:1"), horizon=5)


def oracle_floor(kind, n):
    # float oracles computed with enough slack to be unambiguous
    if kind == "sqrt":
        return math.isqrt(n)
    if kind == "logceil":
        return math.ceil(math.log(max(n, 2))) + 1
    if kind == "pow23":
        return math.floor(1.5 * n ** (2 / 3))
    if kind == "nlog":
        return math.floor(n / math.log(max(n, 2)))


SPECS = {"sqrt": "power:1,1/2", "logceil": "logpow:1,1|ceil+1", "pow23": "power:3/2,2/3", "nlog": "nlog:1,1"}


@given(st.sampled_from(sorted(SPECS)), st.integers(1, 5000))
def test_floor_matches_float_oracle(kind, n):
    f = PhiFunction.parse(SPECS[kind])
    lo, hi = f.bracket(n, 64)
    if math.floor(lo) != math.floor(hi - Fraction(1, 10 ** 9)) and kind != "logceil":
        return  # too close to an integer for the float oracle
    assert f.floor(n) == oracle_floor(kind, n)


@given(st.sampled_from(sorted(SPECS)), st.integers(1, 10 ** 6))
def test_bracket_is_ordered_and_tight(kind, n):
    lo, hi = PhiFunction.parse(SPECS[kind]).bracket(n, 96)
    assert lo <= hi and hi - lo < Fraction(1, 2 ** 80)
