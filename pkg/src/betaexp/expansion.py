"""Greedy beta-expansions, convergents, approximation errors and zero runs."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import DomainError, HorizonExceeded, VerificationError
from .exactnum import (
    Interval,
    Ordering,
    Quadratic,
    as_exact,
    compare,
    floor,
    kind,
    log_bracket,
)

UNBOUNDED = math.inf
EPS_STAR_LIMIT = 1 << 20


def _ceil(x) -> int:
    return -floor(-x)


class Beta:
    """A base ``beta > 1`` with lazily grown expansion-of-1 data.

    The quasi-greedy expansion of 1 (``eps_star``) is generated together with
    its tails ``t_k = sum_i eps*_{k+i} beta^-i``; ``t_k`` is also the scaled
    length ``beta^n |I(w)|`` of any cylinder whose word ends in automaton
    state ``k``. A repeated tail marks the expansion as eventually periodic.
    """

    def __init__(self, value, label: Optional[str] = None):
        value = as_exact(value)
        if compare(value, 1) != Ordering.GT:
            raise DomainError("beta must exceed 1")
        self.value = value
        self.label = label or _default_label(value)
        self.is_integer = isinstance(value, Fraction) and value.denominator == 1
        self.alphabet_top = int(value) - 1 if self.is_integer else floor(value)
        self._lock = threading.Lock()
        self._eps: list = []
        self._tails: list = [Fraction(1)]
        self._seen = {Fraction(1): 0}
        self._period: Optional[Tuple[int, int]] = None
        self._inv = [Fraction(1)]
        self._inv_beta = 1 / value

    # -- constructors ----------------------------------------------------
    @classmethod
    def golden(cls) -> "Beta":
        return cls(Quadratic.golden(), label="golden")

    @classmethod
    def from_spec(cls, spec: str) -> "Beta":
        """Parse ``int:2``, ``rat:3/2``, ``quad:a,b,c,d`` or ``real:<expr>``."""
        tag, _, body = spec.partition(":")
        if tag == "int":
            return cls(Fraction(int(body)), label=spec)
        if tag == "rat":
            return cls(Fraction(body), label=spec)
        if tag == "quad":
            a, b, c, d = (int(t) for t in body.split(","))
            return cls(Quadratic(a, b, c, d), label=spec)
        if tag == "real":
            return cls(Interval.parse(body), label=spec)
        if tag == "golden" or spec == "golden":
            return cls.golden()
        raise DomainError(f"unrecognised beta spec {spec!r}")

    def __repr__(self):
        return f"Beta({self.label})"

    # -- expansion of 1 --------------------------------------------------
    def _extend(self, n: int) -> None:
        with self._lock:
            if n > EPS_STAR_LIMIT:
                raise HorizonExceeded(f"eps_star depth {n} exceeds limit")
            while len(self._eps) < n:
                if self._period is not None:
                    pre, p = self._period
                    k = len(self._eps)
                    self._eps.append(self._eps[pre + (k - pre) % p])
                    continue
                t = self._tails[-1]
                y = self.value * t
                d = _ceil(y) - 1
                t_next = y - d
                self._eps.append(d)
                key = t_next if not isinstance(t_next, Interval) else None
                if key is not None and key in self._seen:
                    j = self._seen[key]
                    self._period = (j, len(self._tails) - j)
                    continue
                self._tails.append(t_next)
                if key is not None:
                    self._seen[key] = len(self._tails) - 1

    def eps_star(self, n: int) -> Tuple[int, ...]:
        """First ``n`` digits of the quasi-greedy expansion of 1."""
        if len(self._eps) < n:
            self._extend(n)
        return tuple(self._eps[:n])

    def eps_star_array(self, n: int) -> np.ndarray:
        if len(self._eps) < n:
            self._extend(n)
        return np.asarray(self._eps[:n], dtype=np.int64)

    @property
    def period(self) -> Optional[Tuple[int, int]]:
        """``(preperiod, period)`` once the expansion of 1 is seen to repeat."""
        return self._period

    def probe_period(self, depth: int = 512) -> Optional[Tuple[int, int]]:
        try:
            self._extend(depth)
        except HorizonExceeded:
            pass
        return self._period

    def canonical_state(self, k: int) -> int:
        """Smallest automaton state with the same future as ``k``."""
        if self._period is None:
            return k
        pre, p = self._period
        if k < pre + p:
            return k
        return pre + (k - pre) % p

    def tail(self, k: int):
        """``t_k``; ``t_0 = 1`` and ``t_k = beta*t_{k-1} - eps*_k``."""
        k = self.canonical_state(k)
        while len(self._tails) <= k and self._period is None:
            self._extend(len(self._eps) + 1)
        return self._tails[self.canonical_state(k)]

    def inv_pow(self, k: int):
        """Exact ``beta**-k`` (cached)."""
        inv = self._inv
        if k >= len(inv):
            with self._lock:
                while len(inv) <= k:
                    inv.append(inv[-1] * self._inv_beta)
        return inv[k]

    def pow(self, k: int):
        if k < 0:
            return self.inv_pow(-k)
        return self.value ** k

    def log(self, bits: int = 128):
        return log_bracket(self.value, bits)


def _default_label(value) -> str:
    if isinstance(value, Quadratic):
        return f"quad:{value.a},{value.b},{value.c},{value.d}"
    if isinstance(value, Fraction):
        return f"int:{value.numerator}" if value.denominator == 1 else f"rat:{value}"
    return "real"


@dataclass(frozen=True)
class DigitSeq:
    """Digits of a greedy expansion plus the orbit point reached after them."""

    digits: Tuple[int, ...]
    terminated: bool
    remainder: object = field(default=Fraction(0), compare=False)

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, i):
        return self.digits[i]

    def array(self) -> np.ndarray:
        return np.asarray(self.digits, dtype=np.int64)


def _check_unit(x) -> None:
    if compare(x, 0) == Ordering.LT or compare(x, 1) != Ordering.LT:
        raise DomainError("x must lie in [0, 1)")


def transform(x, beta: Beta):
    """``T_beta(x) = beta*x - floor(beta*x)``."""
    x = as_exact(x)
    _check_unit(x)
    y = beta.value * x
    return y - floor(y)


def iterate(x, beta: Beta, n: int, keep_points: bool = False):
    """Run ``n`` steps of the greedy digit map from ``x``.

    Returns ``(digits, points, last, terminated_at)``. ``points[k]`` is
    ``T^k x`` (only when ``keep_points``); ``terminated_at`` is the first ``k``
    with ``T^k x = 0`` or None. Digits past termination are 0.
    """
    x = as_exact(x)
    v = beta.value
    if isinstance(x, Fraction) and isinstance(v, Fraction) and not keep_points:
        return _iterate_rational(x, v, n)
    digits = [0] * n
    points = [x] if keep_points else None
    cur = x
    term = 0 if cur == 0 else None
    for k in range(n):
        if term is not None:
            if keep_points:
                points.append(cur)
            continue
        y = v * cur
        d = floor(y)
        cur = y - d
        digits[k] = d
        if keep_points:
            points.append(cur)
        if cur == 0:
            term = k + 1
    return digits, points, cur, term


def _iterate_rational(x: Fraction, v: Fraction, n: int):
    num, den = x.numerator, x.denominator
    if num == 0:
        return [0] * n, None, Fraction(0), 0
    P, Q = v.numerator, v.denominator
    if Q == 1 and P & (P - 1) == 0 and den & (den - 1) == 0:
        return _iterate_pow2(num, den, P.bit_length() - 1, n)
    digits = [0] * n
    term = None
    if Q == 1:
        for k in range(n):
            y = P * num
            d = y // den
            num = y - d * den
            digits[k] = d
            if num == 0:
                term = k + 1
                break
        return digits, None, Fraction(num, den), term
    for k in range(n):
        y = P * num
        den *= Q
        d = y // den
        num = y - d * den
        digits[k] = d
        if num == 0:
            term = k + 1
            break
    return digits, None, Fraction(num, den), term


def _iterate_pow2(num: int, den: int, j: int, n: int):
    """Base ``2**j`` on a dyadic point: digits are groups of ``j`` bits."""
    B = den.bit_length() - 1
    total = n * j
    if total >= B:
        shifted = num << (total - B)
        rem = Fraction(0)
    else:
        shifted = num >> (B - total)
        rem = Fraction(num & ((1 << (B - total)) - 1), 1 << (B - total))
    nbytes = (total + 7) // 8
    bits = np.unpackbits(np.frombuffer(shifted.to_bytes(nbytes, "big"), dtype=np.uint8))
    bits = bits[bits.shape[0] - total:].astype(np.int64)
    if j == 1:
        digits = bits
    else:
        weights = 1 << np.arange(j - 1, -1, -1, dtype=np.int64)
        digits = bits.reshape(n, j) @ weights
    term = None
    if rem == 0:
        nz = np.flatnonzero(digits)
        term = int(nz[-1]) + 1 if nz.size else 0
    return digits.tolist(), None, rem, term


def digits(x, beta: Beta, n: int) -> DigitSeq:
    """First ``n`` digits of the greedy beta-expansion of ``x``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    x = as_exact(x)
    _check_unit(x)
    ds, _, last, term = iterate(x, beta, n)
    return DigitSeq(tuple(ds), term is not None and term <= n, last)


def value_of(word: Sequence[int], beta: Beta):
    """``sum_i word[i] * beta**-(i+1)`` exactly."""
    total = Fraction(0)
    for i, d in enumerate(word):
        if d:
            total = beta.inv_pow(i + 1) * d + total
    return total


def convergent(x, beta: Beta, n: int):
    """``omega_n(x)``: the n-term partial sum of the expansion."""
    return value_of(digits(x, beta, n).digits, beta)


def approx_error(x, beta: Beta, n: int):
    """``x - omega_n(x)``, checked against ``T^n x / beta^n``."""
    x = as_exact(x)
    seq = digits(x, beta, n)
    err = x - value_of(seq.digits, beta)
    if err != seq.remainder * beta.inv_pow(n):
        raise VerificationError("x - omega_n(x) != T^n x / beta^n")
    return err


def default_horizon(beta: Beta, n: int) -> int:
    lo, _ = beta.log(64)
    return n + 64 * math.ceil(math.log(n + 2) / float(lo))


def zero_run_after(x, beta: Beta, n: int, horizon: Optional[int] = None):
    """``l_n(x)``: zeros immediately after digit ``n`` (UNBOUNDED if finite)."""
    if horizon is None:
        horizon = default_horizon(beta, n)
    if horizon < n:
        raise DomainError("horizon must be >= n")
    seq = digits(x, beta, max(horizon, 1))
    runs = _kernels.zero_runs_after(seq.array()) if horizon > 0 else np.array([-1])
    r = int(runs[n])
    if r >= 0:
        return r
    if seq.terminated:
        return UNBOUNDED
    raise HorizonExceeded(f"l_{n} >= {horizon - n}: no nonzero digit by the horizon")


def max_zero_run(x, beta: Beta, n: int) -> int:
    """``r_n(x)``: longest zero run among the first ``n`` digits."""
    seq = digits(x, beta, n)
    return int(_kernels.running_max_zero_run(seq.array())[n])


def zero_run_profile(ds) -> np.ndarray:
    """``l_k`` for every ``k = 0..len``; -1 where unresolved within ``ds``."""
    return _kernels.zero_runs_after(ds)


def run_length_profile(ds) -> np.ndarray:
    """``r_k`` for every ``k = 0..len``."""
    return _kernels.running_max_zero_run(ds)


def expansion_of_one(beta: Beta, n: int) -> Tuple[DigitSeq, DigitSeq]:
    """Greedy ``eps(1, beta)`` and quasi-greedy ``eps*(1, beta)``, ``n`` digits each."""
    if n < 1:
        raise DomainError("n must be >= 1")
    ds = []
    cur = Fraction(1)
    term = False
    for _ in range(n):
        if term:
            ds.append(0)
            continue
        y = beta.value * cur
        d = floor(y)
        cur = y - d
        ds.append(d)
        if cur == 0:
            term = True
    eps = DigitSeq(tuple(ds), term, cur)
    star = DigitSeq(beta.eps_star(n), False, beta.tail(n))
    return eps, star


@dataclass(frozen=True)
class OneProfile:
    ell: Tuple[int, ...]
    M: int
    horizon: int
    sup_over_horizon: int
    certified: bool
    note: str


def ell_one_profile(beta: Beta, n: int, horizon: Optional[int] = None) -> OneProfile:
    """``l_k(1, beta)`` for ``k <= n``, their running max, and A0 evidence.

    Membership of beta in A0 (bounded ``l_k(1, beta)``) is certified only when
    the expansion of 1 is seen to be eventually periodic; otherwise the
    supremum over the horizon is reported as evidence.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if horizon is None:
        horizon = max(4 * n, n + 256)
    beta.probe_period(horizon)
    if beta.period is not None:
        pre, p = beta.period
        horizon = max(horizon, n + 2 * (pre + p) + 2)
    star = beta.eps_star_array(horizon)
    runs = _kernels.zero_runs_after(star)
    if np.any(runs[1:n + 1] < 0):
        raise HorizonExceeded("a zero run in eps* outlives the horizon")
    ell = tuple(int(v) for v in runs[1:n + 1])
    resolved = runs[1:horizon]
    resolved = resolved[resolved >= 0]
    sup_h = int(resolved.max()) if resolved.size else 0
    certified = beta.period is not None
    if certified:
        pre, p = beta.period
        span = _kernels.zero_runs_after(beta.eps_star_array(pre + 3 * p + 2))
        sup_h = max(sup_h, int(span[1:pre + 2 * p + 1].max()))
        note = f"eps* eventually periodic (preperiod {pre}, period {p}); sup is exact"
    else:
        note = "no period found: A0 membership is only semi-decidable; sup over horizon shown"
    return OneProfile(ell, max(ell), horizon, sup_h, certified, note)


def ell_sup(beta: Beta, horizon: int = 1024) -> Tuple[int, bool]:
    """``(M, certified)`` with ``M = sup_n l_n(1, beta)`` (over the horizon if uncertified)."""
    prof = ell_one_profile(beta, 1, horizon)
    return prof.sup_over_horizon, prof.certified
