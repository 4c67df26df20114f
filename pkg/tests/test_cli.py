import io
import json
import os
import subprocess
import sys

import pytest

from betaexp import cli
from betaexp.cli import FIELDS, config_hash, parse_seeds, run_command


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(argv, stdout=out, stderr=err)
    rows = [json.loads(line) for line in out.getvalue().splitlines()]
    return code, rows, err.getvalue()


def by_quantity(rows, q):
    return [r for r in rows if r["quantity"] == q]


def test_expand_golden():
    code, rows, _ = run(["expand", "--beta", "quad:1,1,2,5", "--x", "1/2", "--n", "12"])
    assert code == 0
    assert by_quantity(rows, "digits")[0]["value"] == "0,1,0,0,1,0,0,1,0,0,1,0"


def test_count_golden():
    code, rows, _ = run(["count", "--beta", "quad:1,1,2,5", "--n", "10"])
    assert code == 0 and by_quantity(rows, "count")[0]["exact"] == "144"


def test_rows_follow_the_schema():
    _, rows, _ = run(["cylinder", "--beta", "quad:1,1,2,5", "--word", "1,0"])
    for r in rows:
        assert tuple(r) == FIELDS
        assert r["cmd"] == "cylinder" and len(r["config_hash"]) == 16
    assert by_quantity(rows, "length")[0]["exact"] == "(3-1√5)/2"


def test_montecarlo_small_run():
    code, rows, _ = run(["montecarlo", "--beta", "int:2", "--quantity", "approx_order", "--seeds", "0..9", "--n", "200"])
    assert code == 0
    assert [r["seed"] for r in rows if r["seed"] is not None] == list(range(10))
    assert by_quantity(rows, "violations")[0]["value"] == "0"
    assert -1.05 < float(by_quantity(rows, "summary_median")[0]["value"]) <= -1.0


@pytest.mark.parametrize("argv", [
    ["orbit", "--beta", "rat:3/2", "--x", "1/3", "--n", "4"],
    ["convergents", "--beta", "int:2", "--x", "1/3", "--n", "4"],
    ["runlength", "--beta", "int:2", "--x", "1/8", "--n", "4"],
    ["admissible", "--beta", "rat:3/2", "--word", "1,0,1"],
    ["project", "--beta", "quad:1,1,2,5", "--word", "1,0", "--period", "1,0,0"],
    ["hmap", "--beta", "int:2", "--beta-prime", "quad:1,1,2,5", "--x", "2/3", "--n", "20"],
    ["hits", "--beta", "int:2", "--x", "0", "--phi", "linear:1", "--N", "10"],
    ["schedule", "--beta", "int:2", "--phi", "linear:1", "--delta", "1/10", "--count", "2"],
    ["classh", "--phi", "logpow:1,1|ceil+1", "--horizon", "100000"],
    ["coversum", "--beta", "int:2", "--phi", "linear:1", "--s-plus-delta", "3/5", "--N", "20"],
])
def test_every_command_runs(argv):
    code, rows, err = run(argv)
    assert code == 0, err
    assert rows and all(r["cmd"] == argv[0] for r in rows)


def test_hits_and_runlength_values():
    _, rows, _ = run(["hits", "--beta", "int:2", "--x", "0", "--phi", "linear:1", "--N", "10"])
    assert by_quantity(rows, "hit_count")[0]["value"] == "10"
    _, rows, _ = run(["runlength", "--beta", "int:2", "--x", "5/8", "--n", "3"])
    assert by_quantity(rows, "ell")[-1]["value"] == "inf"


def test_usage_errors_exit_1():
    assert run(["count", "--beta", "int:2"])[0] == 1
    assert run(["nonsense"])[0] == 1
    assert run([])[0] == 1
    assert run(["count", "--beta", "int:2", "--n", "0"])[0] == 1
    assert run(["count", "--beta", "bogus:2", "--n", "3"])[0] == 1
    code, _, err = run(["expand", "--beta", "int:2", "--x", "3/2", "--n", "3"])
    assert code == 1 and err.startswith("betaexp:")


def test_horizon_exhaustion_exits_3():
    code, _, err = run(["schedule", "--beta", "int:2", "--phi", "linear:1", "--delta", "1/10", "--horizon", "300"])
    assert code == 3 and "ScheduleInfeasible" in err


def test_verification_failure_exits_2(monkeypatch):
    def broken(beta, n):
        return 1  # violates the lower counting bound for n >= 1
    monkeypatch.setattr(cli, "count_admissible", broken)
    code, rows, err = run(["count", "--beta", "int:2", "--n", "5"])
    assert code == 2 and "verification" in err
    assert by_quantity(rows, "renyi_bounds")[0]["value"] == "false"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# golden counts\nbeta=quad:1,1,2,5\nn=10\n", encoding="utf-8")
    _, rows, _ = run(["count", "--config", str(cfg)])
    assert by_quantity(rows, "count")[0]["value"] == "144"
    _, rows2, _ = run(["count", "--config", str(cfg), "--n", "11"])
    assert by_quantity(rows2, "count")[0]["value"] == "233"
    _, rows3, _ = run(["count", "--beta", "quad:1,1,2,5", "--n", "10"])
    assert rows3[0]["config_hash"] == rows[0]["config_hash"]
    bad = tmp_path / "bad.cfg"
    bad.write_text("beta=int:2\nwho=me\n", encoding="utf-8")
    assert run(["count", "--config", str(bad), "--n", "3"])[0] == 1


def test_csv_mirror_and_out_file(tmp_path):
    out, mirror = tmp_path / "o.jsonl", tmp_path / "o.csv"
    code, _, _ = run(["count", "--beta", "int:2", "--n", "5", "--out", str(out), "--csv", str(mirror)])
    assert code == 0
    lines = mirror.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(FIELDS)
    assert lines[1].startswith("count,") and ",32,32,false," in lines[1]
    assert json.loads(out.read_text(encoding="utf-8").splitlines()[0])["value"] == "32"


def test_seed_parsing():
    assert parse_seeds("0..3") == [0, 1, 2, 3]
    assert parse_seeds("5,2") == [5, 2]


def test_config_hash_ignores_output_options():
    a = config_hash("count", {"beta": "int:2", "n": 3, "out": "x"})
    b = config_hash("count", {"beta": "int:2", "n": 3, "out": "y", "csv": "z"})
    assert a == b != config_hash("count", {"beta": "int:2", "n": 4})


def test_console_entry_point_and_env_threads(tmp_path):
    env = dict(os.environ, BETAEXP_THREADS="2")
    argv = [sys.executable, "-m", "betaexp", "montecarlo", "--beta", "rat:3/2", "--quantity", "approx_order",
            "--seeds", "0..5", "--n", "60"]
    a = subprocess.run(argv, env=env, capture_output=True, check=True).stdout
    env["BETAEXP_THREADS"] = "1"
    b = subprocess.run(argv, env=env, capture_output=True, check=True).stdout
    assert a == b and a.count(b"\n") > 6
