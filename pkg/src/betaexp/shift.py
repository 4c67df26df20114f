"""The beta-shift: admissible words, counting, successors and cylinder geometry.

Admissibility is decided by the standard automaton over ``eps*(1, beta)``:
the state is the length of the current match against a prefix of ``eps*``;
digit ``d`` is allowed in state ``k`` iff ``d <= eps*_{k+1}``, moving to
``k+1`` on equality and back to 0 otherwise. This is equivalent to asking that
every suffix of the word be lexicographically at most the prefix of ``eps*``
of the same length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

from . import _kernels
from .errors import DomainError, VerificationError
from .expansion import Beta, ell_one_profile, value_of

INT64_SAFE_BITS = 62


@dataclass(frozen=True)
class Word:
    digits: Tuple[int, ...]
    beta: Beta

    def __post_init__(self):
        if len(self.digits) < 1:
            raise DomainError("words have length >= 1")
        top = self.beta.alphabet_top
        for d in self.digits:
            if not 0 <= d <= top:
                raise DomainError(f"digit {d} outside alphabet 0..{top}")

    @classmethod
    def of(cls, beta: Beta, digits: Sequence[int]) -> "Word":
        return cls(tuple(int(d) for d in digits), beta)

    def __len__(self):
        return len(self.digits)

    def __add__(self, tail: Sequence[int]) -> "Word":
        return Word(self.digits + tuple(tail), self.beta)


@dataclass(frozen=True)
class CylinderInterval:
    word: Word
    left: object
    right: object
    length: object
    full: bool


def automaton_states(w: Word):
    """States after each digit, or None if the word is not admissible."""
    eps = w.beta.eps_star_array(len(w) + 1)
    states, flag = _kernels.parry_states(w.digits, eps)
    if flag != -1:
        return None
    return states


def is_admissible(w: Word) -> bool:
    """True iff ``w`` is a prefix of the greedy expansion of some ``x`` in [0, 1)."""
    eps = w.beta.eps_star_array(len(w) + 1)
    _, flag = _kernels.parry_states(w.digits, eps)
    return flag == -1


def _int64_safe(beta: Beta, n: int) -> bool:
    lo, hi = beta.log(64)
    bound_bits = ((n + 1) * float(hi) - math.log(float(beta.value) - 1)) / math.log(2)
    return bound_bits < INT64_SAFE_BITS


def count_admissible(beta: Beta, n: int) -> int:
    """Number of admissible words of length ``n``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if _int64_safe(beta, n):
        return int(_kernels.admissible_counts(beta.eps_star_array(n), n)[n])
    return admissible_counts_exact(beta, n)[n]


def admissible_counts_exact(beta: Beta, n: int):
    """Exact big-integer counts for every length ``0..n`` (states merged by period)."""
    beta.probe_period(min(n + 1, 4096))
    eps = beta.eps_star(n + 1)
    counts = [1]
    state = {0: 1}
    for _ in range(n):
        new: dict = {}
        for k, c in state.items():
            e = eps[k] if k < len(eps) else beta.eps_star(k + 1)[k]
            if e:
                new[0] = new.get(0, 0) + e * c
            k1 = beta.canonical_state(k + 1)
            new[k1] = new.get(k1, 0) + c
        state = new
        counts.append(sum(state.values()))
    return counts


def enumerate_admissible(beta: Beta, n: int) -> Iterator[Tuple[int, ...]]:
    """All admissible words of length ``n`` in lexicographic order."""
    eps = beta.eps_star(n + 1)
    word = [0] * n

    def rec(i, k):
        if i == n:
            yield tuple(word)
            return
        e = eps[k]
        for d in range(e + 1):
            word[i] = d
            yield from rec(i + 1, k + 1 if d == e else 0)

    yield from rec(0, 0)


def next_admissible(w: Word) -> Optional[Word]:
    """Lexicographic successor among admissible words of the same length."""
    ds = w.digits
    n = len(ds)
    top = w.beta.alphabet_top
    for i in range(n - 1, -1, -1):
        if ds[i] < top:
            cand = Word(ds[:i] + (ds[i] + 1,) + (0,) * (n - i - 1), w.beta)
            if is_admissible(cand):
                return cand
    return None


def cylinder(w: Word) -> CylinderInterval:
    """Exact endpoints, length and fullness of ``I(w)``."""
    if not is_admissible(w):
        raise DomainError(f"word {w.digits} is not admissible")
    beta = w.beta
    left = value_of(w.digits, beta)
    nxt = next_admissible(w)
    right = value_of(nxt.digits, beta) if nxt is not None else 1
    length = right - left
    return CylinderInterval(w, left, right, length, length == beta.inv_pow(len(w)))


def cylinder_length(w: Word):
    """``|I(w)| = beta^-n * t_k`` from the automaton state ``k`` of ``w``."""
    states = automaton_states(w)
    if states is None:
        raise DomainError(f"word {w.digits} is not admissible")
    return w.beta.inv_pow(len(w)) * w.beta.tail(int(states[-1]))


def zero_pad_full(w: Word, m: int) -> CylinderInterval:
    """Cylinder of ``w`` followed by ``m`` zeros; must be full when ``m > M_n``."""
    M = ell_one_profile(w.beta, len(w)).M
    if m <= M:
        raise DomainError(f"m={m} must exceed M_n={M}")
    cyl = cylinder(w + (0,) * m)
    if not cyl.full or cyl.length != w.beta.inv_pow(len(w) + m):
        raise VerificationError("zero-padded cylinder is not full")
    return cyl


def level_cylinders(beta: Beta, n: int) -> Iterator[CylinderInterval]:
    for ds in enumerate_admissible(beta, n):
        yield cylinder(Word(ds, beta))
