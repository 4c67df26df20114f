import os
import subprocess
import sys

import numpy as np
from hypothesis import given, strategies as st

from betaexp import _kernels as K
from betaexp.expansion import Beta

NB, NP = K.IMPLEMENTATIONS["numba"], K.IMPLEMENTATIONS["numpy"]
digit_arrays = st.lists(st.integers(0, 2), min_size=0, max_size=200).map(lambda v: np.array(v, dtype=np.int64))


def naive_zero_runs(d):
    n = len(d)
    out = []
    for i in range(n + 1):
        j = i
        while j < n and d[j] == 0:
            j += 1
        out.append(j - i if j < n else -1)
    return out


def naive_running_max(d):
    out, best, cur = [0], 0, 0
    for x in d:
        cur = cur + 1 if x == 0 else 0
        best = max(best, cur)
        out.append(best)
    return out


@given(digit_arrays)
def test_zero_runs_backends_match_naive(d):
    expect = naive_zero_runs(d.tolist())
    assert NB["zero_runs_after"](d).tolist() == expect
    assert NP["zero_runs_after"](d).tolist() == expect


@given(digit_arrays)
def test_running_max_backends_match_naive(d):
    expect = naive_running_max(d.tolist())
    assert NB["running_max_zero_run"](d).tolist() == expect
    assert NP["running_max_zero_run"](d).tolist() == expect


@given(st.sampled_from(["int:2", "rat:3/2", "quad:1,1,2,5", "rat:5/2"]),
       st.lists(st.integers(0, 2), min_size=1, max_size=60), st.integers(0, 3))
def test_parry_states_backends_agree(spec, word, start):
    beta = Beta.from_spec(spec)
    w = np.array([min(d, beta.alphabet_top) for d in word], dtype=np.int64)
    eps = beta.eps_star_array(len(w) + 8)
    a_states, a_flag = NB["parry_states"](w, eps, start)
    b_states, b_flag = NP["parry_states"](w, eps, start)
    assert int(a_flag) == int(b_flag)
    assert a_states.tolist() == b_states.tolist()


@given(st.sampled_from(["int:2", "rat:3/2", "quad:1,1,2,5", "rat:7/4"]), st.integers(1, 55))
def test_admissible_counts_backends_agree(spec, n):
    eps = Beta.from_spec(spec).eps_star_array(n + 2)
    assert NB["admissible_counts"](eps, n).tolist() == NP["admissible_counts"](eps, n).tolist()


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, BETAEXP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from betaexp import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["BETAEXP_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", "from betaexp import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if K.HAVE_NUMBA else "numpy")
