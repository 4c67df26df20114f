"""Command-line interface: ``betaexp <command> [flags]``.

Every command writes line-delimited JSON records with a fixed schema (and an
optional CSV mirror). Options come from flags or from a ``--config`` file of
``key=value`` lines (flags win). Only the precision budget
(``BETAEXP_PRECISION_BUDGET``) and the worker count (``BETAEXP_THREADS``) are
read from the environment.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 precision or
horizon exhausted.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from fractions import Fraction
from typing import Dict, Iterable, List, Optional

import numpy as np

from . import exactnum
from .approxmap import PeriodicDigits, h_map, in_H, project
from .errors import (BoundViolation, DomainError, EnumerationRefused, HorizonExceeded,
                     PrecisionExhausted, ScheduleInfeasible, VerificationError)
from .exactnum import Interval, Quadratic, serialize, to_decimal
from .expansion import (Beta, approx_error, digits, ell_one_profile, iterate,
                        max_zero_run, run_length_profile, value_of, zero_run_profile)
from .experiments import (LazyUniformSample, QUANTITIES, aggregate, hit_count, sweep_many,
                          thread_count, trace)
from .fractal import (NuMeasure, build_schedule, class_H_check, count_level_words, cover_sum,
                      dimension_estimate, index_sets, verify_measure_bounds)
from .phi import PhiFunction
from .shift import Word, count_admissible, cylinder, is_admissible

FIELDS = ("cmd", "config_hash", "seed", "n", "quantity", "value", "exact", "skipped", "reason")
EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_PRECISION = 0, 1, 2, 3
OUTPUT_KEYS = {"out", "csv", "format", "config"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# parsing helpers
def parse_x(text: str):
    """``p/q`` or a decimal gives a rational; ``quad:a,b,c,d`` a quadratic."""
    text = text.strip()
    if text.startswith("quad:"):
        a, b, c, d = (int(t) for t in text[5:].split(","))
        return Quadratic(a, b, c, d)
    try:
        return Fraction(text)
    except ValueError as exc:
        raise DomainError(f"cannot parse x={text!r}") from exc


def parse_word(text: str):
    text = text.strip().strip("()")
    if not text:
        return ()
    return tuple(int(t) for t in text.replace(" ", "").split(","))


def parse_seeds(text: str) -> List[int]:
    """``a..b`` (inclusive) or a comma list."""
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        seeds = list(range(int(a), int(b) + 1))
    else:
        seeds = [int(t) for t in text.split(",") if t.strip()]
    if not seeds:
        raise DomainError("seed range is empty")
    return seeds


def parse_int_list(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def read_config(path: str) -> Dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def config_hash(cmd: str, cfg: Dict[str, object]) -> str:
    items = {k: str(v) for k, v in sorted(cfg.items()) if k not in OUTPUT_KEYS and v is not None}
    blob = json.dumps({"cmd": cmd, **items}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _dec(x, digits: int = 20) -> Optional[str]:
    try:
        return to_decimal(x, digits)
    except PrecisionExhausted:
        return None


def _sci(q: Fraction, digits: int = 12) -> str:
    """Scientific notation for a non-negative rational of any size (truncated)."""
    if q == 0:
        return "0"
    e = len(str(q.numerator)) - len(str(q.denominator))
    if Fraction(10) ** e > q:
        e -= 1
    mant = q / Fraction(10) ** e
    scaled = mant.numerator * 10 ** (digits - 1) // mant.denominator
    txt = str(scaled)
    return f"{txt[0]}.{txt[1:]}e{e:+d}"


def _exact(x) -> Optional[str]:
    if isinstance(x, (int, Fraction, Quadratic)):
        return serialize(x)
    return None


# ---------------------------------------------------------------------------
def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


class Emitter:
    """Collects rows in order; every row carries the command and config hash."""

    def __init__(self, cmd: str, chash: str):
        self.cmd = cmd
        self.chash = chash
        self.rows: List[dict] = []

    def row(self, quantity: str, value=None, n=None, seed=None, exact=None,
            skipped: bool = False, reason: Optional[str] = None):
        if value is not None and not isinstance(value, str):
            value = str(value).lower() if isinstance(value, bool) else str(value)
        self.rows.append({"cmd": self.cmd, "config_hash": self.chash, "seed": seed, "n": n,
                          "quantity": quantity, "value": value, "exact": exact,
                          "skipped": skipped, "reason": reason})

    def num(self, quantity: str, x, n=None, seed=None):
        self.row(quantity, _dec(x), n=n, seed=seed, exact=_exact(x))

    def jsonl(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n" for r in self.rows)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _cell(r[k]) for k in FIELDS})
        return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
def cmd_expand(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    seq = digits(parse_x(a.x), beta, a.n)
    e.row("digits", ",".join(map(str, seq.digits)), n=a.n)
    e.row("terminated", seq.terminated, n=a.n)


def cmd_orbit(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    _, pts, _, _ = iterate(parse_x(a.x), beta, a.n, keep_points=True)
    for k, p in enumerate(pts):
        e.num("orbit_point", p, n=k)


def cmd_convergents(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    x = parse_x(a.x)
    seq = digits(x, beta, a.n)
    for k in range(1, a.n + 1):
        e.num("convergent", value_of(seq.digits[:k], beta), n=k)
        e.num("approx_error", approx_error(x, beta, k), n=k)


def cmd_runlength(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    x = parse_x(a.x)
    horizon = a.horizon or a.n + 64
    seq = digits(x, beta, horizon)
    ell = zero_run_profile(seq.array())
    r = run_length_profile(seq.array())
    for k in range(1, a.n + 1):
        v = int(ell[k])
        if v >= 0:
            e.row("ell", v, n=k, exact=str(v))
        elif seq.terminated:
            e.row("ell", "inf", n=k, reason="finite expansion")
        else:
            e.row("ell", None, n=k, skipped=True, reason="horizon exceeded")
        e.row("r", int(r[k]), n=k, exact=str(int(r[k])))


def _word(a):
    beta = Beta.from_spec(a.beta)
    return beta, Word(parse_word(a.word), beta)


def cmd_admissible(a, e: Emitter):
    _, w = _word(a)
    e.row("admissible", is_admissible(w), n=len(w))


def cmd_count(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    c = count_admissible(beta, a.n)
    e.row("count", c, n=a.n, exact=str(c))
    # beta^n <= count <= beta^(n+1)/(beta-1), exactly
    lower = beta.pow(a.n)
    upper = beta.pow(a.n + 1) / (beta.value - 1)
    ok = exactnum.compare(lower, c) != exactnum.Ordering.GT and exactnum.compare(c, upper) != exactnum.Ordering.GT
    e.row("renyi_bounds", ok, n=a.n)
    if not ok:
        raise VerificationError("count violates the counting bounds")


def cmd_cylinder(a, e: Emitter):
    _, w = _word(a)
    c = cylinder(w)
    n = len(w)
    e.num("left", c.left, n=n)
    e.num("right", c.right, n=n)
    e.num("length", c.length, n=n)
    e.row("full", c.full, n=n)


def cmd_project(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    word = parse_word(a.word)
    src = PeriodicDigits(word, parse_word(a.period)) if a.period else word
    pv = project(src, beta, a.n or len(word))
    e.num("low", pv.value_low, n=pv.terms_used)
    e.num("high", pv.value_high, n=pv.terms_used)


def cmd_hmap(a, e: Emitter):
    beta, beta_p = Beta.from_spec(a.beta), Beta.from_spec(a.beta_prime)
    x = parse_x(a.x)
    ok = in_H(x, beta, beta_p, a.n)
    e.row("in_H", ok, n=a.n)
    if ok:
        pv = h_map(x, beta, beta_p, a.n)
        e.num("low", pv.value_low, n=a.n)
        e.num("high", pv.value_high, n=a.n)


def cmd_montecarlo(a, e: Emitter):
    seeds = parse_seeds(a.seeds)
    if a.quantity not in QUANTITIES:
        raise DomainError(f"quantity must be one of {QUANTITIES}")
    records = []
    if a.quantity == "approx_order":
        results = sweep_many(a.beta, seeds, a.n, a.slack, workers=thread_count())
        bad = 0
        for r in results:
            rec = r.final
            records.append(rec)
            e.row(rec.quantity, rec.value, n=rec.n, seed=r.seed, skipped=rec.skipped, reason=rec.reason)
            bad += r.sandwich_violations + r.identity_violations + (0 if r.band_ok else 1)
        e.row("checked_pairs", sum(r.checked for r in results), exact=str(sum(r.checked for r in results)))
        e.row("violations", bad, exact=str(bad))
        if bad:
            _summary(e, records, a.n)
            raise VerificationError(f"{bad} exact invariant violations")
    else:
        beta = Beta.from_spec(a.beta)
        for s in seeds:
            rec = trace(LazyUniformSample(s), beta, a.quantity, [a.n], slack=a.slack)[0]
            records.append(rec)
            e.row(rec.quantity, rec.value, n=rec.n, seed=s, exact=rec.exact,
                  skipped=rec.skipped, reason=rec.reason)
    _summary(e, records, a.n)


def _summary(e: Emitter, records, n):
    summ = aggregate(records, n)
    for k, v in summ.as_dict().items():
        if k != "n":
            e.row(f"summary_{k}", v, n=n)


def cmd_hits(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    phi = PhiFunction.parse(a.phi)
    x = LazyUniformSample(int(a.x[5:])) if a.x.startswith("seed:") else parse_x(a.x)
    res = hit_count(x, beta, phi, a.event, a.N)
    e.row("hit_count", res.count, n=a.N, exact=str(res.count))
    e.row("hits", ",".join(map(str, res.hits)), n=a.N)


def _schedule(a):
    beta = Beta.from_spec(a.beta)
    return build_schedule(beta, PhiFunction.parse(a.phi), Fraction(a.delta), a.count, a.horizon)


def cmd_schedule(a, e: Emitter):
    s = _schedule(a)
    e.num("m", s.m)
    e.num("s", s.s)
    for i, n in enumerate(s.n_seq, 1):
        e.row("n_i", n, n=i, exact=str(n))
        e.row("floor_phi", s.f_seq[i - 1], n=i, exact=str(s.f_seq[i - 1]))
        lo, hi = s.U_seq[i - 1]
        e.row("U_i", _dec(hi, 12), n=i, exact=serialize(hi) if lo == hi else None)
        if i < s.count:
            e.row("k_i", s.k_seq[i - 1], n=i, exact=str(s.k_seq[i - 1]))
            e.row("r_i", s.r_seq[i - 1], n=i, exact=str(s.r_seq[i - 1]))
    e.row("coverage", s.coverage, exact=str(s.coverage))


def cmd_numeasure(a, e: Emitter):
    s = _schedule(a)
    nu = NuMeasure(s)
    levels = parse_int_list(a.levels) if a.levels else sorted({max(1, s.coverage * t // 10) for t in range(1, 11)})
    sums = nu.level_sums(levels)
    bad = 0
    for n in levels:
        e.num("level_sum", sums[n], n=n)
        bad += sums[n] != 1
    rng = np.random.Generator(np.random.PCG64(a.seed))
    fails = 0
    for _ in range(a.parents):
        n = int(rng.integers(1, s.coverage))
        w = nu.random_branch(n, rng)
        kids = nu.children(w)
        total = sum(v.exact() for _, v in kids)
        fails += total != nu.measure(w).exact()
    e.row("children_sum_failures", fails, exact=str(fails))
    rep = verify_measure_bounds(s, raise_on_violation=False, seed=a.seed)
    viol = sum(not c.holds for c in rep.checks)
    e.row("bound_checks", len(rep.checks), exact=str(len(rep.checks)))
    e.row("bound_violations", viol, exact=str(viol))
    e.row("mmdp_constant", f"{rep.mmdp_constant:.6e}" if rep.mmdp_constant is not None else None)
    if bad or fails or viol:
        raise VerificationError("measure invariants violated")


def cmd_dimension(a, e: Emitter):
    s = _schedule(a)
    rep = dimension_estimate(s, branches=a.branches, seed=a.seed)
    e.row("box_slope", f"{rep.box.slope:.12f}")
    e.row("local_dimension_median", f"{rep.local_median:.12f}", n=rep.level)
    for i, (lo, hi) in enumerate(rep.local_bounds):
        e.row("local_dimension", _dec((lo + hi) / 2, 12), n=rep.level, seed=i)


def cmd_coversum(a, e: Emitter):
    beta = Beta.from_spec(a.beta)
    rep = cover_sum(PhiFunction.parse(a.phi), Fraction(a.s_plus_delta), a.N, None, beta)
    ts = [t for _, t in rep.exponents]
    lo, hi = min(ts), max(ts)
    e.row("exponent_min", _dec(lo, 12), exact=serialize(lo))
    e.row("exponent_max", _dec(hi, 12), exact=serialize(hi))
    e.row("exponent_constant", lo == hi)
    e.row("partial_high", _sci(rep.partial[1]), n=a.N)
    e.row("tail_high", _sci(rep.tail[1]), n=10 * a.N)
    e.row("stabilized", rep.stabilized, n=a.N)


def cmd_classh(a, e: Emitter):
    rep = class_H_check(PhiFunction.parse(a.phi), a.horizon)
    for n, r in rep.ratios:
        e.row("ratio", f"{r:.12f}", n=n)
    e.row("tail_ratio_high", _dec(rep.tail_ratio[1], 12), n=a.horizon)
    e.row("liminf_ratio", str(rep.liminf))
    e.row("passes", rep.passes, n=a.horizon)


COMMANDS = {
    "expand": cmd_expand, "orbit": cmd_orbit, "convergents": cmd_convergents,
    "runlength": cmd_runlength, "admissible": cmd_admissible, "count": cmd_count,
    "cylinder": cmd_cylinder, "project": cmd_project, "hmap": cmd_hmap,
    "montecarlo": cmd_montecarlo, "hits": cmd_hits, "schedule": cmd_schedule,
    "numeasure": cmd_numeasure, "dimension": cmd_dimension, "coversum": cmd_coversum,
    "classh": cmd_classh,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="betaexp", description="Exact beta-expansion experiments.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    def add(name, *specs):
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--csv")
        sp.add_argument("--format", choices=("jsonl", "csv"))
        sp.add_argument("--precision-budget", type=int)
        for flag, kw in specs:
            sp.add_argument(flag, **kw)
        return sp

    beta = ("--beta", {})
    x = ("--x", {})
    n = ("--n", {"type": int})
    word = ("--word", {})
    phi = ("--phi", {})
    sched = [beta, phi, ("--delta", {}), ("--count", {"type": int}), ("--horizon", {"type": int})]
    add("expand", beta, x, n)
    add("orbit", beta, x, n)
    add("convergents", beta, x, n)
    add("runlength", beta, x, n, ("--horizon", {"type": int}))
    add("admissible", beta, word)
    add("count", beta, n)
    add("cylinder", beta, word)
    add("project", beta, word, ("--period", {}), n)
    add("hmap", beta, ("--beta-prime", {}), x, n)
    add("montecarlo", beta, ("--quantity", {}), ("--seeds", {}), n, ("--slack", {"type": int}))
    add("hits", beta, x, phi, ("--event", {}), ("--N", {"type": int}))
    add("schedule", *sched)
    add("numeasure", *sched, ("--levels", {}), ("--parents", {"type": int}), ("--seed", {"type": int}))
    add("dimension", *sched, ("--branches", {"type": int}), ("--seed", {"type": int}))
    add("coversum", beta, phi, ("--s-plus-delta", {}), ("--N", {"type": int}))
    add("classh", phi, ("--horizon", {"type": int}))
    return p


DEFAULTS = {
    "slack": 64, "horizon": None, "count": 3, "parents": 200, "seed": 0, "branches": 50,
    "levels": None, "period": None, "format": "jsonl", "event": "orbit_target",
}
REQUIRED = {
    "expand": ("beta", "x", "n"), "orbit": ("beta", "x", "n"), "convergents": ("beta", "x", "n"),
    "runlength": ("beta", "x", "n"), "admissible": ("beta", "word"), "count": ("beta", "n"),
    "cylinder": ("beta", "word"), "project": ("beta", "word"), "hmap": ("beta", "beta_prime", "x", "n"),
    "montecarlo": ("beta", "quantity", "seeds", "n"), "hits": ("beta", "x", "phi", "N"),
    "schedule": ("beta", "phi", "delta"), "numeasure": ("beta", "phi", "delta"),
    "dimension": ("beta", "phi", "delta"), "coversum": ("beta", "phi", "s_plus_delta", "N"),
    "classh": ("phi",),
}
SCHEDULE_HORIZON = 10 ** 7
CLASSH_HORIZON = 10 ** 6


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Merge flags over the config file over defaults; coerce config strings."""
    cfg = read_config(args.config) if args.config else {}
    sub = parser._subparsers._group_actions[0].choices[args.cmd]
    types = {a.dest: a.type for a in sub._actions if a.dest != "help"}
    for key in cfg:
        if key not in types:
            raise UsageError(f"unknown config key {key!r} for {args.cmd}")
    for dest, typ in types.items():
        if getattr(args, dest) is None:
            if dest in cfg:
                raw = cfg[dest]
                setattr(args, dest, typ(raw) if typ else raw)
            elif dest in DEFAULTS:
                setattr(args, dest, DEFAULTS[dest])
    if args.cmd in ("schedule", "numeasure", "dimension") and args.horizon is None:
        args.horizon = SCHEDULE_HORIZON
    if args.cmd == "classh" and args.horizon is None:
        args.horizon = CLASSH_HORIZON
    missing = [k for k in REQUIRED[args.cmd] if getattr(args, k, None) is None]
    if missing:
        raise UsageError(f"{args.cmd}: missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
    if getattr(args, "n", None) is not None and args.n < 1:
        raise UsageError("--n must be >= 1")
    return args


def run_command(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.cmd:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        args = resolve(args, parser)
        if args.precision_budget:
            exactnum.set_budget(args.precision_budget)
        cfg = {k: v for k, v in vars(args).items() if k != "cmd"}
        em = Emitter(args.cmd, config_hash(args.cmd, cfg))
        code = EXIT_OK
        try:
            COMMANDS[args.cmd](args, em)
        except (VerificationError, BoundViolation) as exc:
            print(f"betaexp: verification failure: {exc}", file=stderr)
            code = EXIT_VERIFY
        text = em.csv() if args.format == "csv" else em.jsonl()
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        if args.csv:
            with open(args.csv, "w", encoding="utf-8", newline="") as fh:
                fh.write(em.csv())
        return code
    except UsageError as exc:
        print(f"betaexp: usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (PrecisionExhausted, HorizonExceeded, ScheduleInfeasible, EnumerationRefused) as exc:
        print(f"betaexp: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_PRECISION
    except (DomainError, ValueError, OSError) as exc:
        print(f"betaexp: usage error: {exc}", file=stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
