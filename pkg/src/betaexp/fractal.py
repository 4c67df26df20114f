"""Cantor-like subsets defined by forced zero runs, and the measure they carry.

A :class:`CantorSchedule` is a sparse sequence ``n_1 < n_2 < ...``. After each
``n_i`` the next ``floor(phi(n_i))`` digits are forced to zero, and the gap up
to ``n_{i+1}`` is cut into blocks of that length, each ending in ``m`` forced
zeros and followed by a forced nonzero digit. The forced zeros make the
cylinders full again (``m`` exceeds every zero run in the expansion of 1), so
the measure ``nu`` built on top of them can be bounded exactly.

Measures are kept as products of a few distinct factors (one per automaton
transition type). Exact values are expanded only on request, and logarithms
are summed factor by factor, so words tens of thousands of digits long stay
cheap.
"""
from __future__ import annotations

import bisect
import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (BoundViolation, DomainError, EmptyAggregate, EnumerationRefused,
                     HorizonExceeded, ScheduleInfeasible, VerificationError)
from .exactnum import Ordering, bracket, compare, exp_bracket, log_bracket
from .expansion import Beta, ell_one_profile, value_of
from .phi import PhiFunction, liminf_ratio

FREE, ZERO, NONZERO = 0, 1, 2
ENUMERATION_LIMIT = 200_000
Bounds = Tuple[Fraction, Fraction]


# ---------------------------------------------------------------------------
# constants depending on beta
def log_beta_of_beta_minus_one(beta: Beta, bits: int = 128) -> Tuple[Bounds, bool]:
    """Bounds on ``log_beta(beta - 1)`` and whether they are exact.

    Exact when ``beta - 1`` is a small integer power of ``beta`` (for instance
    0 for ``beta = 2`` and -1 for the golden ratio).
    """
    b1 = beta.value - 1
    for k in range(-4, 1):
        if b1 == beta.pow(k):
            return (Fraction(k), Fraction(k)), True
    lo, hi = log_bracket(b1, bits)
    b_lo, b_hi = beta.log(bits)
    c = (lo / b_lo, lo / b_hi, hi / b_lo, hi / b_hi)
    return (min(c), max(c)), False


def _log_beta_bounds(x, beta: Beta, bits: int = 128) -> Bounds:
    lo, hi = log_bracket(x, bits)
    b_lo, b_hi = beta.log(bits)
    c = (lo / b_lo, lo / b_hi, hi / b_lo, hi / b_hi)
    return min(c), max(c)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CantorSchedule:
    beta: Beta
    phi: PhiFunction
    delta: Fraction
    M: int
    m: int
    n_seq: Tuple[int, ...]
    f_seq: Tuple[int, ...]
    k_seq: Tuple[int, ...]
    r_seq: Tuple[int, ...]
    C: Bounds
    U_seq: Tuple[Bounds, ...]
    s: Fraction
    strict: bool = True
    notes: Tuple[str, ...] = ()

    @property
    def count(self) -> int:
        return len(self.n_seq)

    @property
    def coverage(self) -> int:
        """Last position whose constraint is determined by the schedule."""
        return self.n_seq[-1] + self.f_seq[-1]

    def checkpoint(self, i: int) -> int:
        """``n_i + floor(phi(n_i))`` (1-based ``i``)."""
        return self.n_seq[i - 1] + self.f_seq[i - 1]

    @classmethod
    def from_sequence(cls, beta: Beta, phi: PhiFunction, delta, n_seq: Sequence[int],
                      strict: bool = True, M: Optional[int] = None) -> "CantorSchedule":
        """Schedule from an explicit ``n_seq``; conditions are verified when ``strict``."""
        delta = Fraction(delta)
        M, notes = _resolve_M(beta, M)
        m = M + 1
        (l_lo, l_hi), _ = log_beta_of_beta_minus_one(beta)
        C = (m + 1 - l_hi, m + 1 - l_lo)
        n_seq = tuple(int(n) for n in n_seq)
        if not n_seq:
            raise DomainError("empty schedule")
        f_seq = tuple(phi.floor(n) for n in n_seq)
        ks, rs = [], []
        for i in range(len(n_seq) - 1):
            gap = n_seq[i + 1] - n_seq[i] - 1
            if f_seq[i] < 1:
                raise ScheduleInfeasible(f"floor(phi(n_{i + 1})) must be >= 1")
            k, r = divmod(gap, f_seq[i])
            ks.append(k)
            rs.append(r)
        U = [(Fraction(0), Fraction(0))]
        for i in range(1, len(n_seq)):
            a = sum(f_seq[j] + rs[j] + 1 for j in range(i))
            b = sum(ks[j] + 1 for j in range(i))
            U.append((C[0] * b + a, C[1] * b + a))
        eta = liminf_ratio(phi, max(10, n_seq[-1]))
        s = Fraction(0) if eta.value == math.inf else 1 / (1 + Fraction(eta.value))
        sched = cls(beta, phi, delta, M, m, n_seq, f_seq, tuple(ks), tuple(rs), C, tuple(U), s,
                    strict, tuple(notes))
        problems = sched.violations()
        if strict and problems:
            raise ScheduleInfeasible("; ".join(problems))
        return sched

    def violations(self) -> List[str]:
        """Every schedule condition that fails (rigorously: brackets must clear)."""
        out = []
        n, f, d = self.n_seq, self.f_seq, self.delta
        if not 0 < d < self.s:
            out.append(f"delta={d} not in (0, s={self.s})")
        if n[0] <= 1:
            out.append("n_1 must exceed 1")
        if not f[0] * d > 4 * self.C[1]:
            out.append(f"first condition fails: floor(phi(n_1))={f[0]} <= 4C/delta")
        for i in range(1, len(n)):
            if not n[i] > n[i - 1] + 1 + f[i - 1]:
                out.append(f"gap condition fails at i={i + 1}")
            elif self.k_seq[i - 1] < 1:
                out.append(f"k_{i} < 1")
            if not d / 2 * (n[i] + f[i]) >= self.U_seq[i][1]:
                out.append(f"growth condition fails at i={i + 1}")
        return out


def _resolve_M(beta: Beta, M: Optional[int]):
    notes = []
    if M is None:
        prof = ell_one_profile(beta, 1, 2048)
        M = prof.sup_over_horizon
        if not prof.certified:
            notes.append("M taken as the zero-run supremum over a finite horizon")
    return M, notes


def build_schedule(beta: Beta, phi: PhiFunction, delta, count: int, horizon: int = 10 ** 7,
                   M: Optional[int] = None) -> CantorSchedule:
    """Greedy-minimal schedule: each ``n_i`` is the smallest value meeting the conditions."""
    if count < 1:
        raise DomainError("count must be >= 1")
    delta = Fraction(delta)
    probe = CantorSchedule.from_sequence(beta, phi, delta, [2], strict=False, M=M)
    if not 0 < delta < probe.s:
        raise ScheduleInfeasible(f"delta={delta} must lie in (0, s={probe.s})")
    C_hi = probe.C[1]
    need = 4 * C_hi / delta

    def first_ok(n):
        return phi.floor(n) > need

    # nondecreasing phi: gallop then bisect for the smallest n_1 > 1
    hi = 2
    while not first_ok(hi):
        hi *= 2
        if hi > horizon:
            raise ScheduleInfeasible("first condition not met within the horizon")
    lo = max(2, hi // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if first_ok(mid):
            hi = mid
        else:
            lo = mid + 1
    n_seq = [lo]
    f_seq = [phi.floor(lo)]
    a_sum, b_sum = 0, 0
    while len(n_seq) < count:
        n_prev, f_prev = n_seq[-1], f_seq[-1]
        cand = n_prev + 2 + f_prev
        while True:
            if cand > horizon:
                raise ScheduleInfeasible(f"no n_{len(n_seq) + 1} within the horizon")
            k, r = divmod(cand - n_prev - 1, f_prev)
            U_hi = C_hi * (b_sum + k + 1) + a_sum + f_prev + r + 1
            f_c = phi.floor(cand)
            if delta / 2 * (cand + f_c) >= U_hi:
                break
            cand += 1
        a_sum += f_prev + r + 1
        b_sum += k + 1
        n_seq.append(cand)
        f_seq.append(f_c)
    return CantorSchedule.from_sequence(beta, phi, delta, n_seq, strict=True, M=M)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class IndexSets:
    """Per-position constraint labels: FREE, ZERO (forced 0) or NONZERO."""

    labels: np.ndarray  # index = position (1-based); labels[0] unused
    gamma: Tuple[Tuple[int, ...], ...]
    lam: Tuple[Tuple[int, ...], ...]

    @property
    def horizon(self) -> int:
        return self.labels.shape[0] - 1

    def in_I1(self, k: int) -> bool:
        return self.label(k) == ZERO

    def in_I2(self, k: int) -> bool:
        return self.label(k) == NONZERO

    def label(self, k: int) -> int:
        if not 1 <= k <= self.horizon:
            raise HorizonExceeded(f"position {k} outside [1, {self.horizon}]")
        return int(self.labels[k])

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "IndexSets":
        arr = np.zeros(len(labels) + 1, dtype=np.int8)
        arr[1:] = labels
        return cls(arr, (), ())


def index_sets(schedule: CantorSchedule, horizon: Optional[int] = None) -> IndexSets:
    cov = schedule.coverage
    horizon = cov if horizon is None else horizon
    if horizon > cov:
        raise HorizonExceeded(f"horizon {horizon} beyond schedule coverage {cov}")
    lab = np.zeros(cov + 1, dtype=np.int8)

    def put(pos, val):
        if lab[pos] not in (FREE, val):
            raise VerificationError(f"position {pos} is in both index sets")
        lab[pos] = val

    n, f, m = schedule.n_seq, schedule.f_seq, schedule.m
    gammas, lams = [], []
    for i in range(len(n)):
        if i >= 1:
            put(n[i], NONZERO)
        for j in range(1, f[i] + 1):
            put(n[i] + j, ZERO)
        if i == len(n) - 1:
            break
        k, r = schedule.k_seq[i], schedule.r_seq[i]
        for j in range(1, k):
            put(n[i] + j * f[i] + 1, NONZERO)
        for j in range(2, k + 1):
            for t in range(1, m + 1):
                put(n[i] + j * f[i] - m + t, ZERO)
        if r <= m:
            g = tuple(range(n[i] + k * f[i] + 1, n[i + 1]))
            lm: Tuple[int, ...] = ()
        else:
            g = tuple(range(n[i + 1] - m, n[i + 1]))
            lm = (n[i] + k * f[i] + 1,)
        for p in g:
            put(p, ZERO)
        for p in lm:
            put(p, NONZERO)
        gammas.append(g)
        lams.append(lm)
    return IndexSets(lab[:horizon + 1].copy(), tuple(gammas), tuple(lams))


# ---------------------------------------------------------------------------
class _Transitions:
    """Automaton moves from each canonical state, with the nu factor of each move."""

    def __init__(self, beta: Beta):
        self.beta = beta
        self._cache: Dict[Tuple[int, int], tuple] = {}
        self._lock = threading.Lock()

    def moves(self, k: int, label: int):
        key = (k, label)
        got = self._cache.get(key)
        if got is not None:
            return got
        beta = self.beta
        e = beta.eps_star(k + 1)[k]
        nxt = [(d, beta.canonical_state(k + 1) if d == e else 0) for d in range(e + 1)]
        tk = beta.tail(k)
        if label == ZERO:
            out = tuple((d, s, Fraction(1)) for d, s in nxt if d == 0)
        elif label == NONZERO:
            k0 = nxt[0][1]
            denom = beta.value * tk - beta.tail(k0)
            out = tuple((d, s, beta.tail(s) / denom) for d, s in nxt if d != 0)
        else:
            out = tuple((d, s, beta.tail(s) / (beta.value * tk)) for d, s in nxt)
        with self._lock:
            self._cache[key] = out
        return out


_TRANSITIONS: Dict[str, _Transitions] = {}


def _transitions(beta: Beta) -> _Transitions:
    t = _TRANSITIONS.get(beta.label)
    if t is None or t.beta is not beta:
        t = _TRANSITIONS[beta.label] = _Transitions(beta)
    return t


@dataclass(frozen=True)
class NuValue:
    """``nu`` of a cylinder as a product of factors (``zero`` for words outside D)."""

    beta: Beta
    factors: Tuple[Tuple[object, int], ...]
    zero: bool = False
    length: int = 0
    state: int = 0

    def exact(self):
        if self.zero:
            return Fraction(0)
        v = Fraction(1)
        for f, mult in self.factors:
            v = v * f ** mult
        return v

    def log_beta(self, bits: int = 128) -> Bounds:
        """Bounds on ``log_beta nu`` (nu > 0)."""
        if self.zero:
            raise DomainError("log of zero measure")
        lo = hi = Fraction(0)
        for f, mult in self.factors:
            if f == 1:
                continue
            a, b = _log_beta_bounds(f, self.beta, bits)
            lo += a * mult
            hi += b * mult
        return lo, hi

    def cylinder_log_beta(self, bits: int = 128) -> Bounds:
        """Bounds on ``log_beta |I(w)| = -n + log_beta t_state``."""
        t = self.beta.tail(self.state)
        if t == 1:
            return Fraction(-self.length), Fraction(-self.length)
        a, b = _log_beta_bounds(t, self.beta, bits)
        return a - self.length, b - self.length


class NuMeasure:
    """The measure ``nu`` on cylinders of a schedule (or of any label array)."""

    def __init__(self, schedule: Optional[CantorSchedule] = None, sets: Optional[IndexSets] = None,
                 beta: Optional[Beta] = None):
        if sets is None:
            if schedule is None:
                raise DomainError("need a schedule or index sets")
            sets = index_sets(schedule)
        self.schedule = schedule
        self.sets = sets
        self.beta = beta or schedule.beta
        self.trans = _transitions(self.beta)
        self._cum: Dict[tuple, tuple] = {}

    def __call__(self, word: Sequence[int]) -> NuValue:
        return self.measure(word)

    def _walk(self, word: Sequence[int], want=()):
        """Run the automaton along ``word``; move counts are keyed by ``(state, label, index)``.

        Returns ``(counts, state, ok, snapshots)`` where ``snapshots`` holds
        the counts and state after each position in ``want``.
        """
        counts: Dict[tuple, int] = {}
        k = 0
        lab = self.sets.labels
        moves_of = self.trans.moves
        snaps = {}
        for pos, d in enumerate(word, start=1):
            label = int(lab[pos])
            moves = moves_of(k, label)
            for idx, (dd, st, fac) in enumerate(moves):
                if dd == d:
                    if fac != 1:
                        key = (k, label, idx)
                        counts[key] = counts.get(key, 0) + 1
                    k = st
                    break
            else:
                return counts, k, False, snaps
            if pos in want:
                snaps[pos] = (dict(counts), k)
        return counts, k, True, snaps

    def _value(self, counts: Dict[tuple, int], length: int, state: int) -> NuValue:
        merged: Dict[object, int] = {}
        for (k, label, idx), mult in counts.items():
            fac = self.trans.moves(k, label)[idx][2]
            merged[fac] = merged.get(fac, 0) + mult
        return NuValue(self.beta, tuple(merged.items()), False, length, state)

    def measure(self, word: Sequence[int]) -> NuValue:
        if len(word) > self.sets.horizon:
            raise HorizonExceeded("word longer than the index-set horizon")
        counts, k, ok, _ = self._walk(word)
        if not ok:
            return NuValue(self.beta, (), True, len(word), 0)
        return self._value(counts, len(word), k)

    def prefixes(self, word: Sequence[int], positions: Sequence[int]) -> Dict[int, NuValue]:
        """``nu`` of several prefixes of one word in a single walk."""
        want = set(positions)
        counts, k, ok, snaps = self._walk(word[:max(want)], want)
        out = {}
        for p in want:
            if p in snaps:
                out[p] = self._value(snaps[p][0], p, snaps[p][1])
            else:
                out[p] = NuValue(self.beta, (), True, p, 0)
        return out

    def children(self, word: Sequence[int]) -> List[Tuple[int, NuValue]]:
        """``nu`` of every one-digit extension, walking the parent only once."""
        word = tuple(word)
        n = len(word) + 1
        if n > self.sets.horizon:
            raise HorizonExceeded("word longer than the index-set horizon")
        counts, k, ok, _ = self._walk(word)
        out = []
        allowed = {}
        if ok:
            label = int(self.sets.labels[n])
            for idx, (d, st, fac) in enumerate(self.trans.moves(k, label)):
                allowed[d] = (idx, st, fac, label)
        for d in range(self.beta.alphabet_top + 1):
            if d not in allowed:
                out.append((d, NuValue(self.beta, (), True, n, 0)))
                continue
            idx, st, fac, label = allowed[d]
            c = dict(counts)
            if fac != 1:
                c[(k, label, idx)] = c.get((k, label, idx), 0) + 1
            out.append((d, self._value(c, n, st)))
        return out

    def level_mass(self, n: int) -> Dict[int, object]:
        """Total nu of all length-``n`` words, grouped by automaton state."""
        mass = {0: Fraction(1)}
        lab = self.sets.labels
        for pos in range(1, n + 1):
            new: Dict[int, object] = {}
            for k, v in mass.items():
                for _, s, fac in self.trans.moves(k, int(lab[pos])):
                    new[s] = new.get(s, 0) + v * fac
            mass = new
        return mass

    def level_sums(self, levels: Sequence[int]) -> Dict[int, object]:
        """Exact level totals at each requested length (one forward pass)."""
        want = set(levels)
        top = max(want)
        out = {}
        mass = {0: Fraction(1)}
        lab = self.sets.labels
        for pos in range(1, top + 1):
            new: Dict[int, object] = {}
            for k, v in mass.items():
                for _, s, fac in self.trans.moves(k, int(lab[pos])):
                    new[s] = new.get(s, 0) + v * fac
            mass = new
            if pos in want:
                out[pos] = sum(mass.values())
        return out

    def _cumulative(self, k: int, label: int):
        key = (k, label)
        got = self._cum.get(key)
        if got is None:
            moves = self.trans.moves(k, label)
            w = [float(f) for _, _, f in moves]
            total = sum(w)
            got = self._cum[key] = (moves, list(itertools.accumulate(x / total for x in w)))
        return got

    def random_branch(self, n: int, rng: np.random.Generator, weighted: bool = True,
                      canonical: bool = False) -> Tuple[int, ...]:
        """A word in D_n drawn digit by digit.

        Digits follow the nu-weights when ``weighted``; otherwise every allowed
        digit is equally likely. ``canonical`` takes the smallest allowed digit
        (0 when free, 1 on forced-nonzero positions).
        """
        word = [0] * n
        k = 0
        lab = self.sets.labels
        u = rng.random(n).tolist()
        for pos in range(1, n + 1):
            moves, cum = self._cumulative(k, int(lab[pos]))
            if canonical or len(moves) == 1:
                choice = moves[0]
            elif weighted:
                choice = moves[min(bisect.bisect_right(cum, u[pos - 1]), len(moves) - 1)]
            else:
                choice = moves[int(u[pos - 1] * len(moves))]
            word[pos - 1] = choice[0]
            k = choice[1]
        return tuple(word)


def nu_measure(schedule: CantorSchedule, word: Sequence[int]):
    """Exact ``nu(I(word))``."""
    return NuMeasure(schedule).measure(word).exact()


# ---------------------------------------------------------------------------
def count_level_words(sets: IndexSets, beta: Beta, n) -> object:
    """Number of admissible length-``n`` words obeying the labels.

    ``n`` may be a list of lengths, in which case a dict is returned.
    """
    levels = sorted(set(n)) if isinstance(n, (list, tuple, set)) else [n]
    if levels[-1] > sets.horizon:
        raise HorizonExceeded("n beyond the index-set horizon")
    trans = _transitions(beta)
    cnt = {0: 1}
    out = {0: 1}
    for pos in range(1, levels[-1] + 1):
        new: Dict[int, int] = {}
        for k, c in cnt.items():
            for _, s, _f in trans.moves(k, int(sets.labels[pos])):
                new[s] = new.get(s, 0) + c
        cnt = new
        out[pos] = sum(cnt.values())
    if isinstance(n, (list, tuple, set)):
        return {m: out[m] for m in levels}
    return out[n]


def level_words(schedule: CantorSchedule, n: int, limit: int = ENUMERATION_LIMIT,
                sets: Optional[IndexSets] = None) -> Tuple[int, Iterator[Tuple[int, ...]]]:
    """``(count, iterator)`` over D_n in lexicographic order.

    The count is always computed; enumeration is refused above ``limit``.
    """
    sets = sets or index_sets(schedule)
    beta = schedule.beta
    total = count_level_words(sets, beta, n)
    if total > limit:
        raise EnumerationRefused(f"{total} words exceeds the enumeration limit {limit}")
    trans = _transitions(beta)

    def gen():
        word = [0] * n

        def rec(pos, k):
            if pos > n:
                yield tuple(word)
                return
            for d, s, _f in trans.moves(k, int(sets.labels[pos])):
                word[pos - 1] = d
                yield from rec(pos + 1, s)

        yield from rec(1, 0)

    return total, gen()


# ---------------------------------------------------------------------------
def _le_power(nu: NuValue, beta: Beta, E: Bounds) -> bool:
    """Decide ``nu <= beta^E`` (E given by bounds); raise if undecidable."""
    lo, hi = nu.log_beta()
    if hi <= E[0]:
        return True
    if lo > E[1]:
        return False
    if E[0] == E[1] and E[0].denominator == 1:
        return compare(nu.exact(), beta.pow(int(E[0]))) != Ordering.GT
    for bits in (256, 1024, 4096):
        lo, hi = nu.log_beta(bits)
        if hi <= E[0]:
            return True
        if lo > E[1]:
            return False
    raise VerificationError("bound comparison undecided")


@dataclass
class BoundCheck:
    kind: str
    i: int
    j: int
    position: int
    log_nu: Bounds
    exponent: Bounds
    holds: bool


@dataclass
class MeasureBoundReport:
    checks: List[BoundCheck] = field(default_factory=list)
    mmdp_constant: Optional[float] = None
    mmdp_exponent: Optional[Fraction] = None
    words_checked: int = 0

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)


def verify_measure_bounds(schedule: CantorSchedule, depth_i: Optional[int] = None, samples: int = 8,
                      seed: int = 0, raise_on_violation: bool = True) -> MeasureBoundReport:
    """Check both measure bounds at every checkpoint up to ``depth_i``.

    At ``n_i``: ``nu <= beta^(U_i - n_i)``. At ``n_i + j*floor(phi(n_i)) - m``
    (``1 <= j <= k_i``): ``nu <= beta^(C(j-1) + U_i - n_i - (j-1)floor(phi(n_i)))``.
    The mass-distribution ratio ``nu / |I|^(s-delta)`` is also tracked and its
    maximum over the sampled cylinders reported.
    """
    depth_i = depth_i or schedule.count
    nu = NuMeasure(schedule)
    rng = np.random.Generator(np.random.PCG64(seed))
    beta = schedule.beta
    rep = MeasureBoundReport(mmdp_exponent=schedule.s - schedule.delta)
    C = schedule.C
    words = [nu.random_branch(schedule.coverage, rng, weighted=(t % 2 == 0)) for t in range(samples)]
    rep.words_checked = len(words)
    best = -math.inf
    for i in range(1, depth_i + 1):
        n_i, f_i = schedule.n_seq[i - 1], schedule.f_seq[i - 1]
        U = schedule.U_seq[i - 1]
        points = [("checkpoint", 0, n_i, (U[0] - n_i, U[1] - n_i))]
        k_i = schedule.k_seq[i - 1] if i < schedule.count else 1
        for j in range(1, k_i + 1):
            pos = n_i + j * f_i - schedule.m
            e = (C[0] * (j - 1) + U[0] - n_i - (j - 1) * f_i, C[1] * (j - 1) + U[1] - n_i - (j - 1) * f_i)
            points.append(("block", j, pos, e))
        for w in words:
            snaps = nu.prefixes(w, [p[2] for p in points])
            for kind, j, pos, e in points:
                v = snaps[pos]
                ok = _le_power(v, beta, e)
                rep.checks.append(BoundCheck(kind, i, j, pos, v.log_beta(), e, ok))
                if not ok and raise_on_violation:
                    raise BoundViolation(f"{kind} bound fails at i={i}, j={j}, position {pos}")
                lo, _ = v.cylinder_log_beta()
                # log_beta(nu / |I|^(s-delta)) upper bound
                best = max(best, float(v.log_beta()[1] - lo * rep.mmdp_exponent))
    rep.mmdp_constant = float(beta.value) ** best if best > -math.inf else None
    return rep


# ---------------------------------------------------------------------------
@dataclass
class SlopeFit:
    slope: float
    intercept: float
    residuals: List[float]
    points: List[Tuple[float, float]]


def _fit(points: List[Tuple[float, float]], through_origin: bool = False) -> SlopeFit:
    if len(points) < 1:
        raise EmptyAggregate("no points to fit")
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    if through_origin or len(points) < 2:
        slope = float((x @ y) / (x @ x))
        icpt = 0.0
    else:
        slope, icpt = (float(v) for v in np.polyfit(x, y, 1))
    res = (y - (slope * x + icpt)).tolist()
    return SlopeFit(slope, icpt, res, points)


def box_dimension(counts: Dict[int, int], beta: Beta) -> SlopeFit:
    """Least-squares slope of ``log count_n`` against ``n log beta`` (through the origin)."""
    if len(counts) < 3:
        raise EmptyAggregate("need at least 3 levels")
    lb = float(sum(beta.log(64)) / 2)
    pts = [(n * lb, math.log(c)) for n, c in sorted(counts.items())]
    return _fit(pts, through_origin=True)


@dataclass
class DimensionReport:
    box: SlopeFit
    local: List[float]
    local_median: float
    local_bounds: List[Bounds]
    level: int


def local_dimension(v: NuValue, bits: int = 128) -> Bounds:
    """Bounds on ``log nu(I) / log |I|``."""
    a, b = v.log_beta(bits)
    c, d = v.cylinder_log_beta(bits)
    cands = (a / c, a / d, b / c, b / d)
    return min(cands), max(cands)


def dimension_estimate(schedule: CantorSchedule, levels: Optional[Sequence[int]] = None,
                       branches: int = 50, seed: int = 0, level: Optional[int] = None) -> DimensionReport:
    """Box-counting slope over ``levels`` and local dimension along nu-random branches.

    The local dimension is taken at ``level`` (default: the deepest checkpoint
    ``n_i + floor(phi(n_i))``, where the forced zero run has just ended).
    """
    sets = index_sets(schedule)
    if levels is None:
        levels = sorted({max(1, schedule.coverage * t // 8) for t in range(1, 9)})
    if len(levels) < 3:
        raise EmptyAggregate("need at least 3 levels")
    counts = count_level_words(sets, schedule.beta, list(levels))
    box = box_dimension(counts, schedule.beta)
    level = level or schedule.checkpoint(schedule.count)
    nu = NuMeasure(schedule, sets)
    rng = np.random.Generator(np.random.PCG64(seed))
    bounds = []
    for _ in range(branches):
        w = nu.random_branch(level, rng)
        bounds.append(local_dimension(nu.measure(w)))
    mids = [float((a + b) / 2) for a, b in bounds]
    return DimensionReport(box, mids, float(np.median(mids)), bounds, level)


def branch_point(schedule: CantorSchedule, rng: Optional[np.random.Generator] = None):
    """A point whose digits follow a D-branch to the schedule coverage, then ``1``."""
    nu = NuMeasure(schedule)
    rng = rng or np.random.Generator(np.random.PCG64(0))
    w = nu.random_branch(schedule.coverage, rng, weighted=False)
    return w, value_of(w + (1,), schedule.beta)


# ---------------------------------------------------------------------------
@dataclass
class ClassHReport:
    passes: bool
    ratios: List[Tuple[int, float]]
    tail_ratio: Bounds
    delta_ratios: Dict[int, Bounds]
    liminf: object
    monotone: bool
    tolerance: Fraction


def _ratio_at(phi: PhiFunction, n: int, shift_mult: int = 1) -> Bounds:
    """Bounds on ``phi(n + c*floor(phi(n))) / phi(n)``."""
    step = shift_mult * phi.floor(n)
    a = phi.bracket(n + step)
    b = phi.bracket(n)
    return a[0] / b[1], a[1] / b[0]


def class_H_check(phi: PhiFunction, horizon: int = 10 ** 6, tolerance=Fraction(1, 100)) -> ClassHReport:
    """Evidence that ``phi(n + phi(n)) / phi(n) -> 1`` on a geometric grid up to ``horizon``."""
    tolerance = Fraction(tolerance)
    grid = sorted({int(round(10 * 2 ** (t / 2))) for t in range(0, 200)
                   if 10 * 2 ** (t / 2) <= horizon} | {horizon})
    ratios = []
    for n in grid:
        lo, hi = _ratio_at(phi, n)
        ratios.append((n, float((lo + hi) / 2)))
    tail = _ratio_at(phi, horizon)
    deltas = {c: _ratio_at(phi, horizon, c) for c in (2, 3)}
    vals = [phi.floor(n) for n in grid]
    monotone = all(a <= b for a, b in zip(vals, vals[1:])) and vals[0] > 0
    eta = liminf_ratio(phi, horizon)
    passes = tail[1] <= 1 + tolerance and eta.value == 0 and monotone
    return ClassHReport(passes, ratios, tail, deltas, eta.value, monotone, tolerance)


# ---------------------------------------------------------------------------
@dataclass
class CoverSumReport:
    exponents: List[Tuple[int, Fraction]]
    partial: Bounds
    tail: Bounds
    stabilized: bool
    N_start: int
    N_end: int


def cover_sum(phi: PhiFunction, s_plus_delta, N_start: int, N_end: Optional[int], beta: Beta,
              tol=Fraction(1, 10 ** 6), bits: int = 96) -> CoverSumReport:
    """Partial sums of ``(beta/(beta-1)) * beta^(-n t_n)``, ``t_n = (1+floor(phi(n))/n)(s+delta) - 1``.

    ``partial`` covers ``[N_start, N_end]``; ``tail`` is the block
    ``[N_end, 10*N_end]``; ``stabilized`` means the tail is below ``tol``.
    """
    sd = Fraction(s_plus_delta)
    if sd <= 0:
        raise DomainError("s + delta must be positive")
    N_end = N_end or 10 * N_start
    pref_lo, pref_hi = bracket(beta.value / (beta.value - 1), bits)
    lb = beta.log(bits)
    exps = []

    def block(a, b, record):
        lo = hi = Fraction(0)
        for n in range(a, b + 1):
            t = (1 + Fraction(phi.floor(n), n)) * sd - 1
            if record:
                exps.append((n, t))
            e = -n * t
            if e == 0:
                lo += 1
                hi += 1
                continue
            e_lo, e_hi = sorted((e * lb[0], e * lb[1]))
            lo += exp_bracket(e_lo, e_lo, bits)[0]
            hi += exp_bracket(e_hi, e_hi, bits)[1]
        return lo * pref_lo, hi * pref_hi

    partial = block(N_start, N_end, True)
    tail = block(N_end, 10 * N_end, False)
    return CoverSumReport(exps, partial, tail, tail[1] < tol, N_start, N_end)


# ---------------------------------------------------------------------------
@dataclass
class ShiftedReport:
    degenerate: bool
    schedule: Optional[CantorSchedule]
    note: str


def e_phi_schedule(beta: Beta, phi: PhiFunction, delta, count: int, horizon: int = 10 ** 7,
                   tail_start: int = 100) -> ShiftedReport:
    """Run the schedule machinery for the shifted function ``phi(n) - n``.

    When ``floor(phi(n) - n) < 1`` somewhere on the tail the shifted set is the
    whole interval and no schedule is needed.
    """
    shifted = phi.minus_n()
    grid = [tail_start * 2 ** t for t in range(0, 40) if tail_start * 2 ** t <= horizon]
    if any(shifted.floor(n) < 1 for n in grid):
        return ShiftedReport(True, None, "phi(n) - n < 1 infinitely often on the grid: full interval")
    return ShiftedReport(False, build_schedule(beta, shifted, delta, count, horizon), "shifted schedule")
