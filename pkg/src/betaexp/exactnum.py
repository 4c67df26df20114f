"""Exact real numbers: rationals, elements of Q(sqrt d), and refinable intervals.

Three kinds of value are used throughout the package:

* rationals -- plain :class:`fractions.Fraction` (ints are accepted too);
* :class:`Quadratic` -- ``(a + b*sqrt(d)) / c`` with integer coefficients;
* :class:`Interval` -- a computable real given by dyadic enclosures that can be
  refined on demand, up to a precision budget.

:func:`floor`, :func:`compare` and :func:`to_decimal` are exact for the first two
kinds. For intervals they refine until the answer is forced, and raise
:class:`~betaexp.errors.PrecisionExhausted` otherwise. Equality is never
inferred for intervals.
"""
from __future__ import annotations

import contextlib
import enum
import math
import os
from fractions import Fraction
from typing import Callable, Tuple, Union

import mpmath
from mpmath import iv
from mpmath.libmp import from_man_exp

from .errors import DomainError, PrecisionExhausted

Bounds = Tuple[Fraction, Fraction]

DEFAULT_BUDGET = int(os.environ.get("BETAEXP_PRECISION_BUDGET", "4096"))


def get_budget() -> int:
    """Current interval precision budget in bits."""
    return DEFAULT_BUDGET


def set_budget(bits: int) -> None:
    global DEFAULT_BUDGET
    if bits < START_BITS:
        raise DomainError(f"precision budget must be >= {START_BITS} bits")
    DEFAULT_BUDGET = int(bits)
START_BITS = 64


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def _squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


class Quadratic:
    """An element ``(a + b*sqrt(d)) / c`` of the real quadratic field Q(sqrt d).

    Stored in lowest terms with ``c > 0``. Arithmetic with ints and Fractions
    stays in the field; mixing two different ``d`` raises :class:`DomainError`.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: int, b: int, c: int = 1, d: int = 5, *, _trusted: bool = False):
        if not _trusted:
            if c == 0:
                raise ZeroDivisionError("zero denominator")
            if not _squarefree(d):
                raise DomainError(f"d={d} must be a square-free integer >= 2")
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(a, b, c)
        if g > 1:
            a //= g
            b //= g
            c //= g
        self.a = a
        self.b = b
        self.c = c
        self.d = d

    @classmethod
    def from_parts(cls, r, s, d: int) -> "Quadratic":
        """Build ``r + s*sqrt(d)`` from rational parts."""
        r = Fraction(r)
        s = Fraction(s)
        c = r.denominator * s.denominator // math.gcd(r.denominator, s.denominator)
        return cls(r.numerator * (c // r.denominator), s.numerator * (c // s.denominator), c, d)

    @classmethod
    def golden(cls) -> "Quadratic":
        return cls(1, 1, 2, 5, _trusted=True)

    # -- helpers ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Quadratic):
            if other.d != self.d:
                raise DomainError(f"cannot mix sqrt({self.d}) with sqrt({other.d})")
            return other.a, other.b, other.c
        if isinstance(other, int):
            return other, 0, 1
        if isinstance(other, Fraction):
            return other.numerator, 0, other.denominator
        return None

    @property
    def rational_part(self) -> Fraction:
        return Fraction(self.a, self.c)

    @property
    def irrational_part(self) -> Fraction:
        return Fraction(self.b, self.c)

    def is_rational(self) -> bool:
        return self.b == 0

    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0 or (a > 0) == (b > 0):
            return 1 if (a > 0 or (a == 0 and b > 0)) else -1
        # opposite signs: the larger magnitude wins; they are never equal
        if a * a > b * b * self.d:
            return 1 if a > 0 else -1
        return 1 if b > 0 else -1

    def conjugate(self) -> "Quadratic":
        return Quadratic(self.a, -self.b, self.c, self.d, _trusted=True)

    def reciprocal(self) -> "Quadratic":
        a, b, c, d = self.a, self.b, self.c, self.d
        norm = a * a - b * b * d
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt d)")
        return Quadratic(c * a, -c * b, norm, d, _trusted=True)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        oa, ob, oc = o
        c = self.c
        if oc == c:
            return Quadratic(self.a + oa, self.b + ob, c, self.d, _trusted=True)
        return Quadratic(self.a * oc + oa * c, self.b * oc + ob * c, c * oc, self.d, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Quadratic(-self.a, -self.b, self.c, self.d, _trusted=True)

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        oa, ob, oc = o
        c = self.c
        if oc == c:
            return Quadratic(self.a - oa, self.b - ob, c, self.d, _trusted=True)
        return Quadratic(self.a * oc - oa * c, self.b * oc - ob * c, c * oc, self.d, _trusted=True)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        oa, ob, oc = o
        a, b, d = self.a, self.b, self.d
        return Quadratic(a * oa + b * ob * d, a * ob + b * oa, self.c * oc, d, _trusted=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Quadratic):
            return self * other.reciprocal()
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            other = Fraction(other)
            return Quadratic(self.a * other.denominator, self.b * other.denominator,
                             self.c * other.numerator, self.d, _trusted=True)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.reciprocal() ** (-k)
        result = Quadratic(1, 0, 1, self.d, _trusted=True)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- comparisons -----------------------------------------------------
    def _cmp(self, other) -> int:
        diff = self - other
        if diff is NotImplemented:
            raise TypeError
        return diff.sign()

    def __eq__(self, other):
        if isinstance(other, (Quadratic, int, Fraction)):
            if isinstance(other, Quadratic) and other.d != self.d:
                return self.b == 0 and other.b == 0 and self.a * other.c == other.a * self.c
            o = self._coerce(other)
            return self.a == o[0] and self.b == o[1] and self.c == o[2]
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(Fraction(self.a, self.c))
        return hash((self.a, self.b, self.c, self.d))

    def __lt__(self, other):
        if isinstance(other, Interval):
            return NotImplemented
        return self._cmp(other) < 0

    def __le__(self, other):
        if isinstance(other, Interval):
            return NotImplemented
        return self._cmp(other) <= 0

    def __gt__(self, other):
        if isinstance(other, Interval):
            return NotImplemented
        return self._cmp(other) > 0

    def __ge__(self, other):
        if isinstance(other, Interval):
            return NotImplemented
        return self._cmp(other) >= 0

    def __floor__(self):
        a, b, c = self.a, self.b, self.c
        if b == 0:
            return a // c
        t = math.isqrt(b * b * self.d)
        fb = t if b > 0 else -t - 1
        return (a + fb) // c

    def __float__(self):
        return float(to_decimal(self, 20))

    def __repr__(self):
        return f"Quadratic({self.a}, {self.b}, {self.c}, d={self.d})"

    def __str__(self):
        sign = "+" if self.b >= 0 else "-"
        return f"({self.a}{sign}{abs(self.b)}√{self.d})/{self.c}"


@contextlib.contextmanager
def _ivprec(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


def _outward_dyadic(lo: Fraction, hi: Fraction, bits: int) -> Bounds:
    scale = 1 << bits
    return (Fraction(math.floor(lo * scale), scale), Fraction(-math.floor(-hi * scale), scale))


def _raw_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    man = int(man)
    v = Fraction(man) * (Fraction(2) ** exp) if exp < 0 else Fraction(man << exp)
    return -v if sign else v


def _fraction_to_raw_down(q: Fraction, bits: int):
    m = math.floor(q * (1 << bits))
    return from_man_exp(m, -bits)


def _fraction_to_raw_up(q: Fraction, bits: int):
    m = -math.floor(-q * (1 << bits))
    return from_man_exp(m, -bits)


def _iv_from_bounds(lo: Fraction, hi: Fraction, bits: int):
    return iv.make_mpf((_fraction_to_raw_down(lo, bits), _fraction_to_raw_up(hi, bits)))


def _bounds_from_iv(v) -> Bounds:
    a, b = v._mpi_
    return _raw_to_fraction(a), _raw_to_fraction(b)


class Interval:
    """A computable real known through refinable dyadic enclosures.

    ``approx(bits)`` must return ``(lo, hi)`` containing the value with
    ``hi - lo <= 2**-bits``. Results are intersected with earlier enclosures so
    refinement is nested.
    """

    __slots__ = ("_approx", "_best", "label")

    def __init__(self, approx: Callable[[int], Bounds], label: str = "interval"):
        self._approx = approx
        self._best: dict = {}
        self.label = label

    def bounds(self, bits: int) -> Bounds:
        if bits in self._best:
            return self._best[bits]
        lo, hi = self._approx(bits)
        for b, (plo, phi) in self._best.items():
            if b < bits:
                lo, hi = max(lo, plo), min(hi, phi)
        self._best[bits] = (lo, hi)
        return lo, hi

    # -- constructors ----------------------------------------------------
    @classmethod
    def exact(cls, x) -> "Interval":
        if isinstance(x, Interval):
            return x
        return cls(lambda bits: bracket(x, bits), label=str(x))

    @classmethod
    def from_mpmath(cls, fn: Callable, label: str = "mpmath") -> "Interval":
        """Wrap ``fn(iv_context) -> ivmpf`` (evaluated with outward rounding)."""

        def approx(bits):
            guard = 16
            while True:
                with _ivprec(bits + guard):
                    lo, hi = _bounds_from_iv(fn(iv))
                if hi - lo <= Fraction(1, 1 << bits):
                    return lo, hi
                guard *= 2
                if guard > 8 * (bits + 64):
                    raise PrecisionExhausted(f"cannot tighten {label} to {bits} bits")

        return cls(approx, label=label)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Interval for a decimal string or one of ``pi``, ``e``, ``sqrt(k)``."""
        t = text.strip()
        if t == "pi":
            return cls.from_mpmath(lambda ctx: ctx.pi, "pi")
        if t == "e":
            return cls.from_mpmath(lambda ctx: ctx.e, "e")
        if t.startswith("sqrt(") and t.endswith(")"):
            k = Fraction(t[5:-1])
            return cls.from_mpmath(lambda ctx: ctx.sqrt(ctx.mpf(k.numerator) / k.denominator), t)
        q = Fraction(t)
        return cls(lambda bits: (q, q), label=t)

    # -- arithmetic ------------------------------------------------------
    @staticmethod
    def _lift(x) -> "Interval":
        return x if isinstance(x, Interval) else Interval.exact(x)

    def _binary(self, other, combine, label):
        other = Interval._lift(other)
        me = self

        def approx(bits):
            guard = 2
            target = Fraction(1, 1 << bits)
            while guard <= DEFAULT_BUDGET:
                lo, hi = combine(me.bounds(bits + guard), other.bounds(bits + guard))
                if hi - lo <= target:
                    return lo, hi
                guard *= 2
            raise PrecisionExhausted(f"{label}: enclosure did not shrink")

        return Interval(approx, label=label)

    def __add__(self, other):
        return self._binary(other, lambda x, y: (x[0] + y[0], x[1] + y[1]), "add")

    __radd__ = __add__

    def __neg__(self):
        me = self
        return Interval(lambda bits: tuple(-v for v in reversed(me.bounds(bits))), label="neg")

    def __sub__(self, other):
        return self._binary(other, lambda x, y: (x[0] - y[1], x[1] - y[0]), "sub")

    def __rsub__(self, other):
        return Interval._lift(other) - self

    def __mul__(self, other):
        def combine(x, y):
            ps = (x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
            return min(ps), max(ps)

        return self._binary(other, combine, "mul")

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        me = self

        def approx(bits):
            p = bits + START_BITS
            while p <= DEFAULT_BUDGET + bits:
                lo, hi = me.bounds(p)
                if lo > 0 or hi < 0:
                    r = (1 / hi, 1 / lo)
                    if r[1] - r[0] <= Fraction(1, 1 << bits):
                        return r
                p *= 2
            raise PrecisionExhausted("reciprocal: cannot separate from zero")

        return Interval(approx, label="recip")

    def __truediv__(self, other):
        return self * Interval._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return Interval._lift(other) * self.reciprocal()

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        result = Interval.exact(Fraction(1))
        for _ in range(k):
            result = result * self
        return result

    def __floor__(self):
        return floor(self)

    def __float__(self):
        lo, hi = self.bounds(START_BITS)
        return float((lo + hi) / 2)

    def __repr__(self):
        lo, hi = self.bounds(START_BITS)
        return f"Interval({self.label}, ~{float((lo + hi) / 2)!r})"


ExactReal = Union[int, Fraction, Quadratic, Interval]


def as_exact(x) -> ExactReal:
    if isinstance(x, (Fraction, Quadratic, Interval)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact value: {x!r}")


def kind(x) -> str:
    if isinstance(x, Interval):
        return "interval"
    if isinstance(x, Quadratic):
        return "quadratic"
    return "rational"


def bracket(x, bits: int) -> Bounds:
    """Rational bounds ``lo <= x <= hi`` with ``hi - lo <= 2**-bits``."""
    if isinstance(x, Interval):
        return x.bounds(bits)
    if isinstance(x, Quadratic):
        if x.b == 0:
            v = Fraction(x.a, x.c)
            return v, v
        # floor(|b| sqrt(d) 2^k) / 2^k brackets |b| sqrt(d) to 2^-k
        k = bits + x.c.bit_length() + 1
        t = math.isqrt(x.b * x.b * x.d << (2 * k))
        s_lo = Fraction(t, 1 << k)
        s_hi = Fraction(t + 1, 1 << k)
        if x.b < 0:
            s_lo, s_hi = -s_hi, -s_lo
        return (x.a + s_lo) / x.c, (x.a + s_hi) / x.c
    v = Fraction(x)
    return v, v


def sign(x, budget: int | None = None) -> int:
    if isinstance(x, Interval):
        budget = budget or DEFAULT_BUDGET
        bits = START_BITS
        while bits <= budget:
            lo, hi = x.bounds(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2
        raise PrecisionExhausted("sign: interval straddles zero within budget")
    if isinstance(x, Quadratic):
        return x.sign()
    return (x > 0) - (x < 0)


def compare(x, y, budget: int | None = None) -> Ordering:
    """Exact three-way comparison (intervals refine and never return EQ)."""
    if isinstance(x, Interval) or isinstance(y, Interval):
        return Ordering(sign(Interval._lift(x) - y, budget))
    if isinstance(x, Quadratic):
        return Ordering((x - y).sign())
    if isinstance(y, Quadratic):
        return Ordering(-(y - x).sign())
    return Ordering((x > y) - (x < y))


def floor(x, budget: int | None = None) -> int:
    """Greatest integer not exceeding ``x``."""
    if isinstance(x, Interval):
        budget = budget or DEFAULT_BUDGET
        bits = START_BITS
        while bits <= budget:
            lo, hi = x.bounds(bits)
            f = math.floor(lo)
            if math.floor(hi) == f and hi != f + 1:
                return f
            bits *= 2
        raise PrecisionExhausted("floor: value may be an integer")
    return math.floor(x)


def to_decimal(x, digits: int, budget: int | None = None) -> str:
    """Correctly rounded fixed-point rendering with ``digits`` fractional digits.

    Rational ties round half to even.
    """
    if digits < 1:
        raise DomainError("digits must be >= 1")
    scale = 10 ** digits
    if isinstance(x, Interval):
        budget = budget or DEFAULT_BUDGET
        bits = max(START_BITS, int(digits * 3.33) + 8)
        while bits <= budget:
            lo, hi = x.bounds(bits)
            a = math.floor(lo * scale + Fraction(1, 2))
            b = math.floor(hi * scale + Fraction(1, 2))
            if a == b and lo * scale + Fraction(1, 2) != a and hi * scale + Fraction(1, 2) != b + 1:
                return _format_scaled(a, digits)
            bits *= 2
        raise PrecisionExhausted("to_decimal: rounding boundary unresolved")
    if isinstance(x, Quadratic) and x.b != 0:
        n = math.floor(x * scale + Fraction(1, 2))
    else:
        q = Fraction(x.a, x.c) if isinstance(x, Quadratic) else Fraction(x)
        n = round(q * scale)
    return _format_scaled(n, digits)


def _format_scaled(n: int, digits: int) -> str:
    neg = n < 0
    s = str(abs(n)).rjust(digits + 1, "0")
    out = f"{s[:-digits]}.{s[-digits:]}"
    return "-" + out if neg else out


def log_bracket(x, bits: int = 128) -> Bounds:
    """Rigorous bounds on the natural log of a positive value."""
    lo, hi = bracket(x, bits + 16)
    p = bits + 16
    while lo <= 0:
        p *= 2
        if p > DEFAULT_BUDGET * 4:
            raise PrecisionExhausted("log of a value not separated from 0")
        lo, hi = bracket(x, p)
    with _ivprec(bits + 32):
        v = iv.log(_iv_from_bounds(lo, hi, p + hi.numerator.bit_length() + 8))
    return _bounds_from_iv(v)


def exp_bracket(lo: Fraction, hi: Fraction, bits: int = 128) -> Bounds:
    """Rigorous bounds on ``exp`` over ``[lo, hi]``."""
    with _ivprec(bits + 32):
        v = iv.exp(_iv_from_bounds(lo, hi, bits + 32))
    return _bounds_from_iv(v)


def to_mpf(x, bits: int = 128) -> mpmath.mpf:
    lo, hi = bracket(x, bits)
    with mpmath.workprec(bits):
        return mpmath.mpf(lo.numerator) / lo.denominator + (mpmath.mpf(hi.numerator) / hi.denominator
                                                            - mpmath.mpf(lo.numerator) / lo.denominator) / 2


def serialize(x) -> str | None:
    """``p/q`` for rationals, ``(a+b√d)/c`` for quadratics, None for intervals."""
    if isinstance(x, Quadratic):
        if x.b == 0:
            return f"{x.a}/{x.c}"
        return str(x)
    if isinstance(x, Interval):
        return None
    q = Fraction(x)
    return f"{q.numerator}/{q.denominator}"
