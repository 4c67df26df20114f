"""Monte-Carlo sweeps over uniformly random points, with every check done exactly.

A :class:`LazyUniformSample` is a stream of fair bits that pins down a dyadic
interval ``[a/2^B, (a+1)/2^B)``. Before digits are used, bits are drawn until
the whole interval lies inside a single cylinder of the requested depth, so
every point of the interval shares those digits. The quantities that depend on
the exact point (``x - omega_n``, ``T^n x``) are then evaluated at the exact
rational representative ``(2a+1)/2^(B+1)``.
"""
from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import (DomainError, EmptyAggregate, HorizonExceeded, PrecisionExhausted,
                     VerificationError)
from .exactnum import Interval, get_budget, Ordering, as_exact, compare, floor, log_bracket, to_decimal
from .expansion import Beta, iterate
from .phi import PhiFunction

QUANTITIES = ("approx_order", "runlength_ratio", "ell_ratio", "orbit_ratio")
EVENTS = ("orbit_target", "convergent_target")
CHUNK = 64
DEFAULT_SLACK = 64


def thread_count() -> int:
    """Worker count from ``BETAEXP_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("BETAEXP_THREADS", "1")))
    except ValueError:
        return 1


class LazyUniformSample:
    """Fair random bits from ``PCG64(seed)``, drawn 64 at a time on demand."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.PCG64(self.seed))
        self._a = 0
        self._bits = 0
        self._resolved: Dict[tuple, "Resolved"] = {}

    @property
    def bits(self) -> int:
        return self._bits

    def extend(self, k: int = CHUNK) -> None:
        chunks = -(-k // CHUNK)
        for word in self._rng.bit_generator.random_raw(chunks).tolist():
            self._a = (self._a << CHUNK) | int(word)
            self._bits += CHUNK

    def ensure(self, k: int) -> None:
        if self._bits < k:
            self.extend(k - self._bits)

    def bit(self, i: int) -> int:
        """The ``i``-th bit (1-based) of the sample."""
        self.ensure(i)
        return (self._a >> (self._bits - i)) & 1

    def interval(self):
        den = 1 << self._bits
        return Fraction(self._a, den), Fraction(self._a + 1, den)

    def representative(self) -> Fraction:
        return Fraction(2 * self._a + 1, 1 << (self._bits + 1))

    def resolve(self, beta: Beta, depth: int) -> "Resolved":
        """Draw bits until the first ``depth`` digits are common to the interval."""
        key = (beta.label, depth)
        if key in self._resolved:
            return self._resolved[key]
        lo, _ = beta.log(64)
        self.ensure(int(depth * float(lo) / 0.6931471805599453) + CHUNK)
        eps = beta.eps_star_array(depth + 1)
        while True:
            x = self.representative()
            ds, _, last, term = iterate(x, beta, depth)
            arr = np.asarray(ds, dtype=np.int64)
            states, flag = _kernels.parry_states(arr, eps)
            if flag != -1:
                raise VerificationError("greedy digits failed the admissibility automaton")
            k = int(states[-1]) if depth else 0
            half = Fraction(1, 1 << (self._bits + 1)) * beta.pow(depth)
            if term is None and half <= last and half <= beta.tail(k) - last:
                res = Resolved(x, depth, arr, last, self._bits)
                self._resolved[key] = res
                return res
            self.extend(CHUNK)


@dataclass(frozen=True)
class Resolved:
    x: Fraction
    depth: int
    digits: np.ndarray
    remainder: object
    bits: int


def sample_real(seed: int) -> LazyUniformSample:
    return LazyUniformSample(seed)


@dataclass(frozen=True)
class TraceRecord:
    n: int
    quantity: str
    low: Optional[Fraction] = None
    high: Optional[Fraction] = None
    skipped: bool = False
    reason: Optional[str] = None
    ell: Optional[int] = None
    exact: Optional[str] = None

    @property
    def value(self) -> Optional[str]:
        if self.skipped:
            return None
        return to_decimal((self.low + self.high) / 2, 20)

    @property
    def mid(self) -> Fraction:
        return (self.low + self.high) / 2


def _skip(n, q, reason, ell=None):
    return TraceRecord(n, q, skipped=True, reason=reason, ell=ell)


def _exact_power(x, beta: Beta, lo, hi) -> Optional[int]:
    """``k`` with ``x == beta**k`` when one exists inside the bracket ``[lo, hi]``."""
    k_lo, k_hi = math.ceil(lo), math.floor(hi)
    if k_lo != k_hi or isinstance(x, Interval) or isinstance(beta.value, Interval):
        return None
    return k_lo if beta.pow(k_lo) == x else None


def _log_beta(x, beta: Beta, bits: int = 128):
    lo, hi = log_bracket(x, bits)
    b_lo, b_hi = beta.log(bits)
    cands = (lo / b_lo, lo / b_hi, hi / b_lo, hi / b_hi)
    lo, hi = min(cands), max(cands)
    k = _exact_power(x, beta, lo, hi)
    if k is not None:
        return Fraction(k), Fraction(k)
    return lo, hi


class Orbit:
    """Digits of ``x`` to ``depth`` plus the orbit points ``T^n x`` for ``n`` in ``keep``."""

    def __init__(self, x, beta: Beta, depth: int, keep: Iterable[int] = ()):
        self.x = x
        self.beta = beta
        self.depth = depth
        want = set(k for k in keep if 0 <= k <= depth)
        top = max(want) if want else 0
        self.points: Dict[int, object] = {}
        fast = isinstance(x, Fraction) and isinstance(beta.value, Fraction)
        if fast:
            ds, _, _, term = iterate(x, beta, depth)
            self._walk(top, want, record_digits=False)
        else:
            ds, term = self._walk(depth, want, record_digits=True)
        self.digits = np.asarray(ds, dtype=np.int64)
        self.terminated_at = term
        self.ell = _kernels.zero_runs_after(self.digits)
        self.r = _kernels.running_max_zero_run(self.digits)

    def _walk(self, steps: int, want, record_digits: bool):
        v = self.beta.value
        cur = self.x
        ds = [0] * steps if record_digits else None
        term = 0 if cur == 0 else None
        if 0 in want:
            self.points[0] = cur
        for k in range(1, steps + 1):
            if term is None:
                y = v * cur
                d = floor(y)
                cur = y - d
                if record_digits:
                    ds[k - 1] = d
                if cur == 0:
                    term = k
            if k in want:
                self.points[k] = cur
        return ds, term

    @classmethod
    def of(cls, x, beta: Beta, n_max: int, keep=(), slack: int = DEFAULT_SLACK):
        if isinstance(x, LazyUniformSample):
            res = x.resolve(beta, n_max + slack)
            return cls(res.x, beta, n_max + slack, keep)
        return cls(as_exact(x), beta, n_max + slack, keep)

    def ell_at(self, n: int):
        """``l_n`` as an int, None when unbounded (finite expansion)."""
        v = int(self.ell[n])
        if v >= 0:
            return v
        if self.terminated_at is not None:
            return None
        raise HorizonExceeded(f"l_{n} not resolved by depth {self.depth}")


def _record(orbit: Orbit, n: int, quantity: str) -> TraceRecord:
    beta = orbit.beta
    if quantity == "runlength_ratio":
        if n < 2:
            return _skip(n, quantity, "log_beta(n) = 0")
        r = int(orbit.r[n])
        lo, hi = _log_beta(Fraction(n), beta)
        return TraceRecord(n, quantity, r / hi, r / lo, exact=str(r))
    if quantity == "ell_ratio":
        if n < 2:
            return _skip(n, quantity, "log_beta(n) = 0")
        try:
            ell = orbit.ell_at(n)
        except HorizonExceeded:
            return _skip(n, quantity, "horizon exceeded")
        if ell is None:
            return _skip(n, quantity, "finite expansion: zero run unbounded")
        lo, hi = _log_beta(Fraction(n), beta)
        return TraceRecord(n, quantity, ell / hi, ell / lo, ell=ell, exact=str(ell))
    t = orbit.points[n]
    if t == 0:
        return _skip(n, quantity, "zero error: finite expansion")
    if quantity == "approx_order":
        try:
            ell = orbit.ell_at(n)
        except HorizonExceeded:
            return _skip(n, quantity, "horizon exceeded")
        lo, hi = _log_beta(t, beta)
        # log_beta(x - omega_n) = log_beta(T^n x) - n
        return TraceRecord(n, quantity, (lo - n) / n, (hi - n) / n, ell=ell)
    if quantity == "orbit_ratio":
        if n < 2:
            return _skip(n, quantity, "log(n) = 0")
        lo, hi = log_bracket(t)
        n_lo, n_hi = log_bracket(Fraction(n))
        return TraceRecord(n, quantity, lo / n_lo, hi / n_hi)
    raise DomainError(f"unknown quantity {quantity!r}")


def trace(x, beta: Beta, quantity: str, n_list: Sequence[int], slack: int = DEFAULT_SLACK) -> List[TraceRecord]:
    """Evaluate ``quantity`` at each ``n``; failures become skipped records."""
    if quantity not in QUANTITIES:
        raise DomainError(f"unknown quantity {quantity!r}")
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be strictly ascending")
    keep = n_list if quantity in ("approx_order", "orbit_ratio") else ()
    orbit = Orbit.of(x, beta, n_list[-1], keep=keep, slack=slack)
    out = []
    for n in n_list:
        try:
            out.append(_record(orbit, n, quantity))
        except (PrecisionExhausted, HorizonExceeded) as exc:
            out.append(_skip(n, quantity, type(exc).__name__))
    return out


def sandwich_band(n: int, ell: int):
    """``[-1-(l+1)/n, -1-l/n]``, where ``(1/n) log_beta(x-omega_n)`` must lie."""
    return Fraction(-n - ell - 1, n), Fraction(-n - ell, n)


@dataclass
class SweepResult:
    seed: int
    beta: str
    checked: int = 0
    sandwich_violations: int = 0
    identity_violations: int = 0
    skipped: int = 0
    skip_reasons: Dict[str, int] = field(default_factory=dict)
    final: Optional[TraceRecord] = None
    band_ok: bool = True


def sandwich_sweep(sample, beta: Beta, n_max: int, slack: int = DEFAULT_SLACK) -> SweepResult:
    """Check the error identity and the zero-run sandwich exactly for all ``n <= n_max``.

    For each ``n``: ``x - omega_n == T^n x / beta^n`` and
    ``beta^-(n+l+1) <= x - omega_n <= beta^-(n+l)``.
    """
    seed = getattr(sample, "seed", -1)
    orbit = Orbit.of(sample, beta, n_max, keep=range(n_max + 1), slack=slack)
    out = SweepResult(seed, beta.label)
    x = orbit.x
    omega = Fraction(0)
    for n in range(1, n_max + 1):
        d = int(orbit.digits[n - 1])
        if d:
            omega = omega + beta.inv_pow(n) * d
        err = x - omega
        t = orbit.points[n]
        if err != t * beta.inv_pow(n):
            out.identity_violations += 1
        if t == 0:
            out.skipped += 1
            out.skip_reasons["zero error"] = out.skip_reasons.get("zero error", 0) + 1
            continue
        try:
            ell = orbit.ell_at(n)
        except HorizonExceeded:
            out.skipped += 1
            out.skip_reasons["horizon"] = out.skip_reasons.get("horizon", 0) + 1
            continue
        out.checked += 1
        lower = beta.inv_pow(n + ell + 1)
        upper = beta.inv_pow(n + ell)
        if compare(lower, err) == Ordering.GT or compare(err, upper) == Ordering.GT:
            out.sandwich_violations += 1
    rec = _record(orbit, n_max, "approx_order")
    out.final = rec
    if not rec.skipped:
        lo, hi = sandwich_band(n_max, rec.ell)
        out.band_ok = lo <= rec.low and rec.high <= hi
    return out


def _sweep_worker(args):
    spec, seed, n_max, slack = args
    return sandwich_sweep(LazyUniformSample(seed), Beta.from_spec(spec), n_max, slack)


def sweep_many(spec: str, seeds: Sequence[int], n_max: int, slack: int = DEFAULT_SLACK,
               workers: Optional[int] = None) -> List[SweepResult]:
    """Parallel map of :func:`sandwich_sweep` over seeds; results sorted by seed."""
    workers = workers or thread_count()
    jobs = [(spec, s, n_max, slack) for s in seeds]
    if workers <= 1:
        beta = Beta.from_spec(spec)
        res = [sandwich_sweep(LazyUniformSample(s), beta, n_max, slack) for s in seeds]
    else:
        with ProcessPoolExecutor(workers) as ex:
            res = list(ex.map(_sweep_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return sorted(res, key=lambda r: r.seed)


def run_length_ratio(sample: LazyUniformSample, n: int) -> TraceRecord:
    """``r_n / log_2 n`` for a binary lazy sample (digits are bits)."""
    return trace(sample, Beta(2), "runlength_ratio", [n], slack=0)[0]


@dataclass(frozen=True)
class Summary:
    n: int
    count: int
    skipped: int
    mean: Fraction
    median: Fraction
    quantiles: Dict[str, Fraction]

    def as_dict(self, digits: int = 12) -> dict:
        fmt = lambda v: to_decimal(v, digits)
        return {"n": self.n, "count": self.count, "skipped": self.skipped,
                "mean": fmt(self.mean), "median": fmt(self.median),
                **{f"q{k}": fmt(v) for k, v in self.quantiles.items()}}


def aggregate(records: Iterable[TraceRecord], n: Optional[int] = None) -> Summary:
    """Order-independent statistics of the unskipped records at ``n``."""
    recs = [r for r in records if n is None or r.n == n]
    vals = sorted(r.mid for r in recs if not r.skipped)
    if not vals:
        raise EmptyAggregate("no unskipped records to aggregate")
    skipped = sum(1 for r in recs if r.skipped)
    qs = {}
    for p in (5, 25, 75, 95):
        pos = Fraction(p, 100) * (len(vals) - 1)
        i = int(pos)
        frac = pos - i
        nxt = vals[min(i + 1, len(vals) - 1)]
        qs[f"{p:02d}"] = vals[i] + (nxt - vals[i]) * frac
    return Summary(recs[0].n if n is None else n, len(vals), skipped,
                   sum(vals) / len(vals), statistics.median(vals), qs)


@dataclass(frozen=True)
class HitResult:
    count: int
    hits: tuple


def _below_power(t, beta: Beta, phi: PhiFunction, n: int) -> bool:
    """Exactly decide ``t <= beta^-phi(n)`` for ``t >= 0``."""
    if t == 0:
        return True
    p = phi.exact(n)
    if p is not None:
        if p.denominator == 1:
            return compare(t, beta.pow(-int(p))) != Ordering.GT
        # t <= beta^(-a/b)  <=>  t^b <= beta^-a
        return compare(t ** p.denominator, beta.pow(-p.numerator)) != Ordering.GT
    bits = 128
    while bits <= get_budget():
        lo, hi = _log_beta(t, beta, bits)
        f_lo, f_hi = phi.bracket(n, bits)
        if hi < -f_hi:
            return True
        if lo > -f_lo:
            return False
        bits *= 2
    raise PrecisionExhausted(f"hit test undecided at n={n}")


def hit_count(x, beta: Beta, phi: PhiFunction, event: str, N: int) -> HitResult:
    """Count ``n <= N`` with ``T^n x <= beta^-phi(n)`` (orbit) or ``x - omega_n <= beta^-phi(n)``."""
    if event not in EVENTS:
        raise DomainError(f"unknown event {event!r}")
    if N < 1:
        raise DomainError("N must be >= 1")
    orbit = Orbit.of(x, beta, N, keep=range(1, N + 1), slack=0)
    hits = []
    for n in range(1, N + 1):
        t = orbit.points[n]
        if event == "convergent_target":
            t = t * beta.inv_pow(n)
        if _below_power(t, beta, phi, n):
            hits.append(n)
    return HitResult(len(hits), tuple(hits))


def record_row(cmd: str, config_hash: str, rec: TraceRecord, seed=None) -> dict:
    """One output row in the stable JSONL schema."""
    return {"cmd": cmd, "config_hash": config_hash, "seed": seed, "n": rec.n,
            "quantity": rec.quantity, "value": rec.value, "exact": rec.exact,
            "skipped": rec.skipped, "reason": rec.reason}
