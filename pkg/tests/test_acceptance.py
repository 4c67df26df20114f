"""End-to-end acceptance runs; each test records one pass/fail line."""
import io
import itertools
import random
import statistics
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from betaexp.approxmap import PeriodicDigits, holder_check, in_H, is_golden_safe_cycle
from betaexp.cli import run_command
from betaexp.exactnum import Ordering, compare
from betaexp.expansion import Beta, digits
from betaexp.experiments import (LazyUniformSample, aggregate, run_length_ratio, sweep_many,
                                 thread_count)
from betaexp.fractal import (NuMeasure, build_schedule, class_H_check, cover_sum, dimension_estimate,
                             verify_measure_bounds)
from betaexp.phi import PhiFunction
from betaexp.shift import Word, count_admissible, level_cylinders, zero_pad_full

BASES = ("int:2", "rat:3/2", "quad:1,1,2,5")
SAMPLES = 1000


@pytest.fixture(scope="module")
def sweeps():
    return {spec: sweep_many(spec, range(SAMPLES), 300, workers=thread_count()) for spec in BASES}


@pytest.fixture(scope="module")
def schedule():
    return build_schedule(Beta.from_spec("int:2"), PhiFunction.parse("linear:1"), Fraction(1, 10), 3)


def test_c01_exact_sandwich(sweeps, criterion):
    with criterion(1, "exact zero-run sandwich, 3 bases x 1000 samples, n <= 300") as c:
        checked = sum(r.checked for rs in sweeps.values() for r in rs)
        bad = sum(r.sandwich_violations for rs in sweeps.values() for r in rs)
        c.detail = f"{checked} pairs, {bad} violations"
        assert checked > 0.9 * 3 * SAMPLES * 300
        assert bad == 0


def test_c02_error_identity(sweeps, criterion):
    with criterion(2, "x - omega_n == T^n x / beta^n on every computed pair") as c:
        bad = sum(r.identity_violations for rs in sweeps.values() for r in rs)
        c.detail = f"{bad} violations"
        assert bad == 0


def test_c03_approximation_order(sweeps, criterion):
    with criterion(3, "median of (1/n) log_beta(x - omega_n) at n=300 in [-1.02, -1.00]") as c:
        meds, out_of_band = {}, 0
        for spec, rs in sweeps.items():
            meds[spec] = aggregate([r.final for r in rs], 300).median
            out_of_band += sum(not r.band_ok for r in rs)
        c.detail = ", ".join(f"{k}: {float(v):.5f}" for k, v in meds.items()) + f"; {out_of_band} outside band"
        assert all(Fraction(-102, 100) <= v <= -1 for v in meds.values())
        assert out_of_band == 0


def brute_count(beta, n):
    star = beta.eps_star(n + 1)
    top = beta.alphabet_top
    return sum(all(w[k:] <= star[:n - k] for k in range(n))
               for w in itertools.product(range(top + 1), repeat=n))


def test_c04_counting(criterion):
    with criterion(4, "admissible counts within the counting bounds for n <= 20; golden counts are Fibonacci") as c:
        golden = Beta.from_spec("quad:1,1,2,5")
        fib = [0, 1]
        while len(fib) < 30:
            fib.append(fib[-1] + fib[-2])
        checked = 0
        for spec in ("rat:3/2", "quad:1,1,2,5"):
            beta = Beta.from_spec(spec)
            for n in range(1, 21):
                cnt = count_admissible(beta, n)
                assert compare(beta.pow(n), cnt) != Ordering.GT
                assert compare(cnt, beta.pow(n + 1) / (beta.value - 1)) != Ordering.GT
                if n <= 12:
                    assert cnt == brute_count(beta, n)
                checked += 1
        assert all(count_admissible(golden, n) == fib[n + 2] for n in range(1, 21))
        c.detail = f"{checked} counts checked"


def test_c05_full_cylinders(criterion):
    with criterion(5, "golden words padded with 2 zeros give full cylinders; tilings sum to 1") as c:
        golden = Beta.from_spec("quad:1,1,2,5")
        rng = random.Random(2024)
        for _ in range(100):
            n = rng.randint(1, 15)
            w = []
            for _ in range(n):
                w.append(0 if w and w[-1] == 1 else rng.randint(0, 1))
            cyl = zero_pad_full(Word(tuple(w), golden), 2)
            assert cyl.full and cyl.length == golden.inv_pow(n + 2)
        for spec in BASES:
            beta = Beta.from_spec(spec)
            for n in range(1, 11):
                assert sum(cy.length for cy in level_cylinders(beta, n)) == 1
        c.detail = "100 words, 30 tilings"


def test_c06_run_length_law(criterion):
    with criterion(6, "median r_n / log_2 n at n=1e5 over 100 seeds in [0.85, 1.20]") as c:
        recs = [run_length_ratio(LazyUniformSample(s), 10 ** 5) for s in range(100)]
        med = aggregate(recs, 10 ** 5).median
        c.detail = f"median {float(med):.4f}"
        assert Fraction(85, 100) <= med <= Fraction(120, 100)


def test_c07_holder(criterion):
    with criterion(7, "Hoelder inequality for h with beta=2, beta'=golden on 500 periodic pairs") as c:
        two, golden = Beta.from_spec("int:2"), Beta.from_spec("quad:1,1,2,5")
        K = golden.value ** 3
        rng = random.Random(77)
        cycles = []
        while len(cycles) < 1000:
            L = rng.randint(1, 12)
            cyc = tuple(rng.randint(0, 1) for _ in range(L))
            if is_golden_safe_cycle(cyc):
                cycles.append(cyc)
        bad = 0
        for a, b in zip(cycles[::2], cycles[1::2]):
            pa, pb = PeriodicDigits((), a), PeriodicDigits((), b)
            x, y = pa.value(two), pb.value(two)
            for p, v in ((pa, x), (pb, y)):
                assert digits(v, two, 40).digits == p.take(40)
                assert in_H(v, two, golden, 40)
            res = holder_check(pa.value(golden), pb.value(golden), x, y, two, golden, K)
            bad += not res.holds
        c.detail = f"500 pairs, {bad} violations"
        assert bad == 0


def test_c08_measure(schedule, criterion):
    with criterion(8, "nu: level sums, children sums and both measure bounds, exactly") as c:
        nu = NuMeasure(schedule)
        levels = sorted({max(1, schedule.coverage * t // 10) for t in range(1, 11)})
        sums = nu.level_sums(levels)
        assert len(levels) == 10 and all(v == 1 for v in sums.values())
        rng = np.random.Generator(np.random.PCG64(8))
        for _ in range(200):
            n = int(rng.integers(1, schedule.coverage))
            w = nu.random_branch(n, rng)
            assert sum(v.exact() for _, v in nu.children(w)) == nu.measure(w).exact()
        rep = verify_measure_bounds(schedule, raise_on_violation=False)
        kinds = {b.kind for b in rep.checks}
        checkpoints = {b.i for b in rep.checks}
        c.detail = f"{len(rep.checks)} bound checks at checkpoints {sorted(checkpoints)}"
        assert rep.ok and kinds == {"checkpoint", "block"} and checkpoints == {1, 2, 3}


def test_c09_dimension(schedule, criterion):
    with criterion(9, "local dimension along 50 nu-branches at the deepest checkpoint in [0.35, 0.60]") as c:
        rep = dimension_estimate(schedule, branches=50, seed=9)
        c.detail = f"median {rep.local_median:.4f}, range [{min(rep.local):.4f}, {max(rep.local):.4f}], level {rep.level}"
        assert 0.35 <= rep.local_median <= 0.60


def test_c10_class_H(criterion):
    with criterion(10, "class H: ceil(sqrt n), ceil(log n)+1 pass; n fails with ratio >= 1.99") as c:
        good = [class_H_check(PhiFunction.parse(s), 10 ** 6) for s in ("power:1,1/2|ceil", "logpow:1,1|ceil+1")]
        bad = class_H_check(PhiFunction.parse("linear:1"), 10 ** 6)
        c.detail = f"tails {[float(r.tail_ratio[1]) for r in good]}, linear {float(bad.tail_ratio[0])}"
        assert all(r.passes and r.tail_ratio[1] <= Fraction(101, 100) and r.liminf == 0 for r in good)
        assert not bad.passes and bad.tail_ratio[0] >= Fraction(199, 100)


def test_c11_cover_sum(criterion):
    with criterion(11, "cover sum for phi=n, s+delta=3/5: tail < 1e-6 for N >= 200, t_n = 1/5") as c:
        two = Beta.from_spec("int:2")
        tails = []
        for N in (200, 400):
            rep = cover_sum(PhiFunction.parse("linear:1"), Fraction(3, 5), N, None, two)
            assert {t for _, t in rep.exponents} == {Fraction(1, 5)}
            assert rep.stabilized and rep.tail[1] < Fraction(1, 10 ** 6)
            tails.append(float(rep.tail[1]))
        c.detail = f"tails {tails}"


DETERMINISM_RUNS = [
    ["expand", "--beta", "rat:3/2", "--x", "2/7", "--n", "30"],
    ["orbit", "--beta", "quad:1,1,2,5", "--x", "1/3", "--n", "10"],
    ["convergents", "--beta", "int:2", "--x", "5/7", "--n", "10"],
    ["runlength", "--beta", "int:2", "--x", "1/9", "--n", "20"],
    ["admissible", "--beta", "rat:3/2", "--word", "1,0,1,0"],
    ["count", "--beta", "rat:3/2", "--n", "100"],
    ["cylinder", "--beta", "rat:3/2", "--word", "1,0,0"],
    ["project", "--beta", "quad:1,1,2,5", "--word", "1,0,1", "--n", "3"],
    ["hmap", "--beta", "int:2", "--beta-prime", "quad:1,1,2,5", "--x", "2/3", "--n", "16"],
    ["montecarlo", "--beta", "rat:3/2", "--quantity", "approx_order", "--seeds", "0..19", "--n", "120"],
    ["hits", "--beta", "int:2", "--x", "seed:4", "--phi", "const:2", "--N", "40"],
    ["schedule", "--beta", "int:2", "--phi", "linear:1", "--delta", "1/10"],
    ["numeasure", "--beta", "int:2", "--phi", "linear:1", "--delta", "1/10", "--count", "1", "--parents", "20"],
    ["dimension", "--beta", "int:2", "--phi", "linear:1", "--delta", "1/10", "--count", "2", "--branches", "5"],
    ["coversum", "--beta", "int:2", "--phi", "linear:1", "--s-plus-delta", "3/5", "--N", "30"],
    ["classh", "--phi", "power:1,1/2|ceil", "--horizon", "100000"],
]


def test_c12_determinism(criterion, tmp_path):
    with criterion(12, "every command twice gives byte-identical output") as c:
        for argv in DETERMINISM_RUNS:
            outs = []
            for t in range(2):
                path = tmp_path / f"{argv[0]}{t}.jsonl"
                assert run_command(argv + ["--out", str(path)], stderr=io.StringIO()) == 0, argv
                outs.append(path.read_bytes())
            assert outs[0] == outs[1] and outs[0], argv[0]
        # fresh interpreters with different worker counts
        argv = [sys.executable, "-m", "betaexp"] + DETERMINISM_RUNS[9]
        runs = [subprocess.run(argv, capture_output=True, check=True,
                               env={**__import__("os").environ, "BETAEXP_THREADS": str(k)}).stdout
                for k in (1, 2)]
        assert runs[0] == runs[1]
        c.detail = f"{len(DETERMINISM_RUNS)} commands, plus a 1-vs-2 worker rerun"
