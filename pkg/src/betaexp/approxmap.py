"""Transporting digits between two bases.

For ``beta > beta' > 1`` the map ``h(x) = pi_{beta'}(eps(x, beta))`` reads the
greedy ``beta``-digits of ``x`` as ``beta'``-digits. It is defined on the set
``H`` of points whose ``beta``-expansion is ``beta'``-admissible. Everything here
is exact except the Hölder exponent, which is bracketed with interval
arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .errors import NotInDomain, PrecisionExhausted, VerificationError
from .exactnum import get_budget, bracket, exp_bracket, log_bracket
from .expansion import Beta, DigitSeq, digits, ell_one_profile, value_of
from .shift import Word, is_admissible


@dataclass(frozen=True)
class PeriodicDigits:
    """The infinite word ``prefix + period^inf`` (empty period means zeros)."""

    prefix: Tuple[int, ...] = ()
    period: Tuple[int, ...] = ()

    def take(self, n: int) -> Tuple[int, ...]:
        out = list(self.prefix[:n])
        if self.period:
            while len(out) < n:
                out.extend(self.period)
        else:
            out.extend([0] * (n - len(out)))
        return tuple(out[:n])

    def value(self, beta: Beta):
        """Exact ``pi_beta`` of the infinite word."""
        v = value_of(self.prefix, beta) if self.prefix else Fraction(0)
        if self.period:
            L = len(self.period)
            block = value_of(self.period, beta)
            v = v + beta.inv_pow(len(self.prefix)) * block / (1 - beta.inv_pow(L))
        return v


@dataclass(frozen=True)
class ProjectedValue:
    value_low: object
    value_high: object
    terms_used: int

    @property
    def exact(self) -> bool:
        return self.value_low == self.value_high

    def midpoint(self):
        return (self.value_low + self.value_high) / 2


def project(omega, beta: Beta, n: int) -> ProjectedValue:
    """``pi_beta(omega)`` from ``n`` terms plus the geometric tail bound.

    ``omega`` may be a :class:`DigitSeq` (a terminated one gives an exact
    value), a :class:`PeriodicDigits` (always exact) or a plain digit sequence
    whose continuation is unknown.
    """
    if isinstance(omega, PeriodicDigits):
        v = omega.value(beta)
        return ProjectedValue(v, v, n)
    ds = tuple(omega)[:n]
    top = beta.alphabet_top
    if any(d < 0 or d > top for d in ds):
        raise NotInDomain("digit outside the alphabet of the target base")
    low = value_of(ds, beta) if ds else Fraction(0)
    if isinstance(omega, DigitSeq) and omega.terminated and len(omega) <= n:
        return ProjectedValue(low, low, n)
    # the unknown tail starts after the digits we actually have
    m = len(ds)
    tail = beta.inv_pow(m) * top / (beta.value - 1)
    return ProjectedValue(low, low + tail, m)


def in_H(x, beta: Beta, beta_p: Beta, n: int) -> bool:
    """Depth-``n`` evidence that ``x`` lies in ``pi_beta(S_beta')``."""
    ds = digits(x, beta, n).digits
    if any(d > beta_p.alphabet_top for d in ds):
        return False
    return is_admissible(Word(ds, beta_p))


def h_map(x, beta: Beta, beta_p: Beta, n: int) -> ProjectedValue:
    seq = digits(x, beta, n)
    if not in_H(x, beta, beta_p, n):
        raise NotInDomain(f"beta-digits of x are not {beta_p.label}-admissible by depth {n}")
    return project(seq, beta_p, n)


def holder_exponent(beta: Beta, beta_p: Beta, bits: int = 128) -> Tuple[Fraction, Fraction]:
    """Bounds on ``log beta' / log beta``."""
    a_lo, a_hi = log_bracket(beta_p.value, bits)
    b_lo, b_hi = log_bracket(beta.value, bits)
    return a_lo / b_hi, a_hi / b_lo


def holder_constant(beta_p: Beta, M: Optional[int] = None, horizon: int = 256):
    if M is None:
        M = ell_one_profile(beta_p, horizon).M
    return beta_p.pow(M + 2)


@dataclass(frozen=True)
class HolderResult:
    lhs_high: Fraction
    rhs_low: Fraction
    holds: bool
    bits: int


def holder_check(hx, hy, x, y, beta: Beta, beta_p: Beta, constant,
                 budget: Optional[int] = None) -> HolderResult:
    """Certify ``|h(x)-h(y)| <= K |x-y|^alpha`` with ``alpha = log beta'/log beta``.

    ``hx`` and ``hy`` are exact values of ``h``; ``constant`` is ``K``. The
    check refines precision until it is decided either way.
    """
    budget = budget or get_budget()
    diff_h = abs(hx - hy)
    gap = abs(x - y)
    if gap == 0:
        if diff_h != 0:
            raise VerificationError("h is not a function: equal inputs, distinct outputs")
        return HolderResult(Fraction(0), Fraction(0), True, 0)
    bits = 128
    while bits <= budget:
        lh_lo, lh_hi = bracket(diff_h, bits)
        k_lo, k_hi = bracket(constant, bits)
        al_lo, al_hi = holder_exponent(beta, beta_p, bits)
        lg_lo, lg_hi = log_bracket(gap, bits)
        # log|x-y| < 0 so the smallest product comes from the largest exponent
        e_lo = min(al_lo * lg_lo, al_hi * lg_lo, al_lo * lg_hi, al_hi * lg_hi)
        e_hi = max(al_lo * lg_lo, al_hi * lg_lo, al_lo * lg_hi, al_hi * lg_hi)
        p_lo, _ = exp_bracket(e_lo, e_lo, bits)
        _, p_hi = exp_bracket(e_hi, e_hi, bits)
        rhs_lo, rhs_hi = k_lo * p_lo, k_hi * p_hi
        if lh_hi <= rhs_lo:
            return HolderResult(lh_hi, rhs_lo, True, bits)
        if lh_lo > rhs_hi:
            return HolderResult(lh_lo, rhs_hi, False, bits)
        bits *= 2
    raise PrecisionExhausted("Hölder inequality not decided within budget")


def is_golden_safe_cycle(period: Sequence[int]) -> bool:
    """True when ``period^inf`` is admissible for the golden base in the strict sense.

    The cycle must avoid ``11`` cyclically and must not be the alternating
    word, whose shift equals the expansion of 1.
    """
    L = len(period)
    if L == 0:
        return True
    if any(period[i] == 1 and period[(i + 1) % L] == 1 for i in range(L)):
        return False
    alternating = L % 2 == 0 and all(period[i] != period[(i + 1) % L] for i in range(L))
    return not alternating
