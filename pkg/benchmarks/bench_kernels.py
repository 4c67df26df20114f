"""Time the numba and numpy versions of every digit kernel on the same inputs.

Usage: python benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Both backends are imported directly, so the BETAEXP_DISABLE_NUMBA flag does
not matter here. Outputs are compared before any timing is reported.
"""
import argparse
import time

import numpy as np

from betaexp import _kernels as K
from betaexp.expansion import Beta


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def inputs(n, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    binary = rng.integers(0, 2, n).astype(np.int64)
    golden = Beta.from_spec("quad:1,1,2,5")
    eps = golden.eps_star_array(n + 2)
    # an admissible golden word: no two consecutive ones
    word = binary.copy()
    for i in range(1, n):
        if word[i] and word[i - 1]:
            word[i] = 0
    return {
        "zero_runs_after": (binary,),
        "running_max_zero_run": (binary,),
        "parry_states": (word, eps, 0),
        "admissible_counts": (eps, min(n, 60)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba is not importable; only the numpy column is meaningful")
    data = inputs(args.n, args.seed)
    nb, npy = K.IMPLEMENTATIONS["numba"], K.IMPLEMENTATIONS["numpy"]
    print(f"{'kernel':<22}{'numba (s)':>12}{'numpy (s)':>12}{'ratio':>9}")
    for name, call_args in data.items():
        a, b = nb[name](*call_args), npy[name](*call_args)
        same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
        if not same:
            raise SystemExit(f"{name}: backends disagree")
        t_nb = best_of(nb[name], call_args, args.repeat)  # first call above paid the compile
        t_np = best_of(npy[name], call_args, args.repeat)
        print(f"{name:<22}{t_nb:>12.5f}{t_np:>12.5f}{t_np / max(t_nb, 1e-9):>9.1f}")


if __name__ == "__main__":
    main()
