"""Digit-array kernels.

Each kernel has a numba ``@njit`` version and a numpy version. The numba path
is used unless ``BETAEXP_DISABLE_NUMBA=1`` is set or numba fails to import.
Both versions are always importable so they can be cross-checked and
benchmarked against each other.

Conventions: digit arrays are 1-D ``int64``; ``eps_star`` holds the first
digits of the quasi-greedy expansion of 1 (index 0 is the first digit).
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("BETAEXP_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# zero runs after each position: out[i] = zeros in d[i:], -1 if they reach the end
@njit(cache=True)
def _zero_runs_after_nb(d):
    n = d.shape[0]
    out = np.empty(n + 1, dtype=np.int64)
    out[n] = -1
    for i in range(n - 1, -1, -1):
        if d[i] != 0:
            out[i] = 0
        elif out[i + 1] < 0:
            out[i] = -1
        else:
            out[i] = out[i + 1] + 1
    return out


def _zero_runs_after_np(d):
    d = np.asarray(d, dtype=np.int64)
    n = d.shape[0]
    idx = np.arange(n + 1)
    marks = np.full(n + 1, n, dtype=np.int64)
    nz = np.flatnonzero(d)
    marks[nz] = nz
    nxt = np.minimum.accumulate(marks[::-1])[::-1]
    out = nxt - idx
    out[nxt == n] = -1
    return out


# ---------------------------------------------------------------------------
# running longest zero run: out[k] = longest run of zeros within d[:k]
@njit(cache=True)
def _running_max_zero_run_nb(d):
    n = d.shape[0]
    out = np.zeros(n + 1, dtype=np.int64)
    cur = 0
    best = 0
    for i in range(n):
        if d[i] == 0:
            cur += 1
            if cur > best:
                best = cur
        else:
            cur = 0
        out[i + 1] = best
    return out


def _running_max_zero_run_np(d):
    d = np.asarray(d, dtype=np.int64)
    n = d.shape[0]
    out = np.zeros(n + 1, dtype=np.int64)
    if n == 0:
        return out
    idx = np.arange(n)
    last_nz = np.maximum.accumulate(np.where(d != 0, idx, -1))
    run = idx - last_nz
    out[1:] = np.maximum.accumulate(run)
    return out


# ---------------------------------------------------------------------------
# beta-shift automaton: state = current match length against eps_star
@njit(cache=True)
def _parry_states_nb(word, eps_star, start):
    n = word.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    k = start
    m = eps_star.shape[0]
    for i in range(n):
        if k >= m:
            return out, -2
        e = eps_star[k]
        w = word[i]
        if w > e:
            return out, i
        if w == e:
            k += 1
        else:
            k = 0
        out[i] = k
    return out, -1


def _parry_states_np(word, eps_star, start):
    word = np.asarray(word, dtype=np.int64)
    eps_star = np.asarray(eps_star, dtype=np.int64)
    n = word.shape[0]
    m = eps_star.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    k = int(start)
    for i, w in enumerate(word.tolist()):
        if k >= m:
            return out, -2
        e = eps_star[k]
        if w > e:
            return out, i
        k = k + 1 if w == e else 0
        out[i] = k
    return out, -1


# ---------------------------------------------------------------------------
# admissible-word counts by length in int64 (callers guard against overflow)
@njit(cache=True)
def _admissible_counts_nb(eps_star, n):
    counts = np.zeros(n + 1, dtype=np.int64)
    state = np.zeros(n + 1, dtype=np.int64)
    state[0] = 1
    counts[0] = 1
    for length in range(1, n + 1):
        new = np.zeros(n + 1, dtype=np.int64)
        for k in range(length):
            c = state[k]
            if c == 0:
                continue
            e = eps_star[k]
            new[0] += e * c
            new[k + 1] += c
        state = new
        counts[length] = state.sum()
    return counts


def _admissible_counts_np(eps_star, n):
    eps_star = np.asarray(eps_star[:n], dtype=np.int64)
    counts = np.zeros(n + 1, dtype=np.int64)
    state = np.zeros(n + 1, dtype=np.int64)
    state[0] = 1
    counts[0] = 1
    for length in range(1, n + 1):
        new = np.zeros(n + 1, dtype=np.int64)
        new[0] = np.dot(eps_star[:length], state[:length])
        new[1:length + 1] = state[:length]
        state = new
        counts[length] = state.sum()
    return counts


IMPLEMENTATIONS = {
    "numba": {
        "zero_runs_after": _zero_runs_after_nb,
        "running_max_zero_run": _running_max_zero_run_nb,
        "parry_states": _parry_states_nb,
        "admissible_counts": _admissible_counts_nb,
    },
    "numpy": {
        "zero_runs_after": _zero_runs_after_np,
        "running_max_zero_run": _running_max_zero_run_np,
        "parry_states": _parry_states_np,
        "admissible_counts": _admissible_counts_np,
    },
}

BACKEND = "numba" if USE_NUMBA else "numpy"
_active = IMPLEMENTATIONS[BACKEND]


def _arr(d):
    return np.ascontiguousarray(d, dtype=np.int64)


def zero_runs_after(digits):
    """``out[i]`` = number of zeros starting at 0-based index ``i``; -1 if unresolved."""
    return _active["zero_runs_after"](_arr(digits))


def running_max_zero_run(digits):
    """``out[k]`` = longest zero run inside the first ``k`` digits."""
    return _active["running_max_zero_run"](_arr(digits))


def parry_states(word, eps_star, start=0):
    """Automaton states after each digit.

    Returns ``(states, flag)``: ``flag`` is -1 if the word is admissible, the
    0-based index of the first offending digit otherwise, or -2 when
    ``eps_star`` is too short to decide.
    """
    states, flag = _active["parry_states"](_arr(word), _arr(eps_star), int(start))
    return states, int(flag)


def admissible_counts(eps_star, n):
    """int64 counts of admissible words of every length up to ``n``."""
    return _active["admissible_counts"](_arr(eps_star), int(n))
