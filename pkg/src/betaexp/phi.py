"""Positive functions ``phi`` on the integers, with exact floors where possible.

Spec strings look like ``kind:params[|modifier...]``:

==========  ==========================  ======================
kind        value                       params
==========  ==========================  ======================
linear      ``a*n``                     ``a``
power       ``a*n**g``                  ``a,g``
logpow      ``a*(log n)**g``            ``a,g``
nlog        ``a*n/(log n)**g``          ``a,g``
const       ``c``                       ``c``
table       explicit values             ``v1,v2,...`` (``phi(1)=v1``)
==========  ==========================  ======================

Modifiers are applied left to right: ``ceil``, ``floor``, ``+c`` / ``-c``
(rational offset) and ``minus_n`` (subtract ``n``). ``ceil+1`` is shorthand
for ``ceil|+1``. Logarithms are natural and are evaluated at ``max(n, 2)`` so
that every form stays finite and positive at ``n = 1``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .errors import DomainError, PrecisionExhausted
from .exactnum import get_budget, exp_bracket, log_bracket

Bounds = Tuple[Fraction, Fraction]
KINDS = ("linear", "power", "logpow", "nlog", "const", "table")


def _iroot(a: int, q: int) -> int:
    """``floor(a ** (1/q))`` for ``a >= 0``."""
    if a < 2 or q == 1:
        return a
    x = 1 << -(-a.bit_length() // q)
    while True:
        y = ((q - 1) * x + a // x ** (q - 1)) // q
        if y >= x:
            break
        x = y
    while x ** q > a:
        x -= 1
    while (x + 1) ** q <= a:
        x += 1
    return x


def _pow_bracket(base: Bounds, g: Fraction, bits: int) -> Bounds:
    lo, hi = base
    if g == 0:
        return Fraction(1), Fraction(1)
    if g.denominator == 1 and g > 0:
        return lo ** int(g), hi ** int(g)
    l_lo, _ = log_bracket(lo, bits)
    _, l_hi = log_bracket(hi, bits)
    e_lo, e_hi = sorted((g * l_lo, g * l_hi))
    return exp_bracket(e_lo, e_lo, bits)[0], exp_bracket(e_hi, e_hi, bits)[1]


@dataclass(frozen=True)
class PhiFunction:
    kind: str
    params: Tuple[Fraction, ...]
    modifiers: Tuple[str, ...] = ()
    label: str = ""

    # -- parsing -------------------------------------------------------
    @classmethod
    def parse(cls, spec: str) -> "PhiFunction":
        head, *mods = spec.split("|")
        kind, _, body = head.partition(":")
        kind = kind.strip()
        if kind not in KINDS:
            raise DomainError(f"unknown phi kind {kind!r}")
        params = tuple(Fraction(t.strip()) for t in body.split(",") if t.strip())
        need = {"linear": 1, "const": 1, "power": 2, "logpow": 2, "nlog": 2}
        if kind in need and len(params) != need[kind]:
            raise DomainError(f"{kind} takes {need[kind]} parameter(s)")
        if kind == "table" and not params:
            raise DomainError("table needs values")
        flat = []
        for m in mods:
            for tok in re.findall(r"ceil|floor|minus_n|[+-][0-9/]+", m.replace(" ", "")):
                flat.append(tok)
            if not re.fullmatch(r"(ceil|floor|minus_n|[+-][0-9/]+)+", m.replace(" ", "")):
                raise DomainError(f"bad phi modifier {m!r}")
        return cls(kind, params, tuple(flat), spec)

    @classmethod
    def linear(cls, a=1) -> "PhiFunction":
        return cls.parse(f"linear:{Fraction(a)}")

    def with_modifier(self, mod: str) -> "PhiFunction":
        return PhiFunction(self.kind, self.params, self.modifiers + (mod,), f"{self.label}|{mod}")

    def minus_n(self) -> "PhiFunction":
        return self.with_modifier("minus_n")

    def __str__(self):
        return self.label

    # -- the inner closed form ------------------------------------------
    def _inner_exact(self, n: int) -> Optional[Fraction]:
        k, p = self.kind, self.params
        if k == "linear":
            return p[0] * n
        if k == "const":
            return p[0]
        if k == "table":
            if n > len(p):
                raise DomainError(f"table phi undefined at n={n}")
            return p[n - 1]
        if k == "power":
            a, g = p
            if g.denominator == 1 and g >= 0:
                return a * Fraction(n) ** int(g)
            r = _iroot(n ** abs(g.numerator), g.denominator)
            if g > 0 and r ** g.denominator == n ** g.numerator:
                return a * r
            return None
        if k in ("logpow", "nlog") and p[1] == 0:
            return p[0] * (n if k == "nlog" else 1)
        return None

    def _inner_floor(self, n: int, ceil: bool = False) -> int:
        ex = self._inner_exact(n)
        if ex is not None:
            return math.ceil(ex) if ceil else math.floor(ex)
        if self.kind == "power":
            a, g = self.params
            if a > 0 and g > 0:
                # a n^(p/q) >= t  <=>  t^q den^q <= num^q n^p (t >= 0)
                num, den = a.numerator, a.denominator
                q, pp = g.denominator, g.numerator
                rhs = num ** q * n ** pp
                t = _iroot(rhs // den ** q, q)
                while (t + 1) ** q * den ** q <= rhs:
                    t += 1
                while t > 0 and t ** q * den ** q > rhs:
                    t -= 1
                exact = t ** q * den ** q == rhs
                return t if not ceil or exact else t + 1
        bits = 64
        op = math.ceil if ceil else math.floor
        while bits <= get_budget():
            lo, hi = self._inner_bracket(n, bits)
            if op(lo) == op(hi):
                return op(lo)
            bits *= 2
        raise PrecisionExhausted(f"phi({n}) may be an integer")

    def _inner_bracket(self, n: int, bits: int = 128) -> Bounds:
        ex = self._inner_exact(n)
        if ex is not None:
            return ex, ex
        k, (a, g) = self.kind, self.params
        if k == "power":
            b = _pow_bracket((Fraction(n), Fraction(n)), g, bits)
        else:
            L = log_bracket(Fraction(max(n, 2)), bits + 8)
            b = _pow_bracket(L, g, bits)
            if k == "nlog":
                b = (n / b[1], n / b[0])
        lo, hi = a * b[0], a * b[1]
        return (lo, hi) if lo <= hi else (hi, lo)

    # -- public evaluation ---------------------------------------------
    def exact(self, n: int) -> Optional[Fraction]:
        """``phi(n)`` as a rational when it is one, else None."""
        val = self._inner_exact(n)
        for i, m in enumerate(self.modifiers):
            if m in ("ceil", "floor"):
                val = Fraction(self._floor_prefix(n, i, ceil=(m == "ceil")))
            elif val is None:
                return None
            elif m == "minus_n":
                val = val - n
            else:
                val = val + Fraction(m)
        return val

    def _floor_prefix(self, n: int, upto: int, ceil: bool) -> int:
        """Floor/ceil of the value after the first ``upto`` modifiers."""
        if upto == 0:
            return self._inner_floor(n, ceil)
        prev = PhiFunction(self.kind, self.params, self.modifiers[:upto])
        ex = prev.exact(n)
        if ex is not None:
            return math.ceil(ex) if ceil else math.floor(ex)
        shift = Fraction(0)
        for m in self.modifiers[:upto]:
            shift += -n if m == "minus_n" else Fraction(m)
        inner = self._inner_floor(n, ceil) if shift.denominator == 1 else None
        if inner is not None:
            return inner + int(shift)
        return prev._floor_by_bracket(n, ceil)

    def _floor_by_bracket(self, n: int, ceil: bool) -> int:
        bits = 64
        while bits <= get_budget():
            lo, hi = self.bracket(n, bits)
            op = math.ceil if ceil else math.floor
            if op(lo) == op(hi):
                return op(lo)
            bits *= 2
        raise PrecisionExhausted(f"phi({n}) may be an integer")

    def bracket(self, n: int, bits: int = 128) -> Bounds:
        ex = self.exact(n)
        if ex is not None:
            return ex, ex
        lo, hi = self._inner_bracket(n, bits)
        for m in self.modifiers:
            if m == "minus_n":
                lo, hi = lo - n, hi - n
            else:
                c = Fraction(m)
                lo, hi = lo + c, hi + c
        return lo, hi

    def floor(self, n: int) -> int:
        """``floor(phi(n))`` exactly."""
        ex = self.exact(n)
        if ex is not None:
            return math.floor(ex)
        return self._floor_prefix(n, len(self.modifiers), ceil=False)

    def approx(self, n: int) -> float:
        lo, hi = self.bracket(n, 64)
        return float((lo + hi) / 2)

    def __call__(self, n: int):
        ex = self.exact(n)
        return ex if ex is not None else self.approx(n)

    # -- analytic facts ---------------------------------------------------
    def growth(self) -> Tuple[str, Fraction]:
        """``(shape, coefficient)`` describing ``phi(n)/n`` as ``n -> inf``."""
        k, p = self.kind, self.params
        minus = Fraction(self.modifiers.count("minus_n"))
        if k == "linear":
            c = p[0]
        elif k == "power":
            c = p[0] if p[1] == 1 else (Fraction(0) if p[1] < 1 else None)
        elif k == "nlog":
            c = p[0] if p[1] == 0 else (Fraction(0) if p[1] > 0 else None)
        elif k in ("logpow", "const"):
            c = Fraction(0)
        else:
            return "table", Fraction(0)
        if c is None:
            return "infinite", Fraction(0)
        return "closed", c - minus

    def is_table(self) -> bool:
        return self.kind == "table"


@dataclass(frozen=True)
class LiminfResult:
    value: object
    exact: bool
    caveat: str


def liminf_ratio(phi: PhiFunction, horizon: int = 1000, window: int = 0) -> LiminfResult:
    """``liminf phi(n)/n``: analytic for closed forms, tail-window minimum for tables."""
    if horizon < 10:
        raise DomainError("horizon must be >= 10")
    shape, c = phi.growth()
    if shape == "closed":
        return LiminfResult(c, True, "closed form limit")
    if shape == "infinite":
        return LiminfResult(math.inf, True, "superlinear growth")
    top = min(horizon, len(phi.params))
    start = max(1, top - (window or max(1, top // 2)) + 1)
    vals = [phi.exact(n) / n for n in range(start, top + 1)]
    return LiminfResult(min(vals), False, f"minimum over n in [{start}, {top}]; finite data cannot prove a liminf")


def dimension_target(phi: PhiFunction, horizon: int = 1000):
    """``1/(1 + liminf phi(n)/n)``, the dimension of the run-length Cantor set."""
    eta = liminf_ratio(phi, horizon)
    if eta.value == math.inf:
        return Fraction(0)
    return 1 / (1 + Fraction(eta.value))
