import csv
import json
import os
import subprocess
import sys

import pytest

from rocftp.cli import COMMANDS, main


def read_rows(path):
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r and not r[0].startswith("#")]


def test_sample_example(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sample", "--target", "case1", "--range", "-10,10", "--sigma", "1",
                 "--block-length", "29", "--n", "100", "--seed", "1", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert rows[0] == ["sample"] and len(rows) == 101
    assert all(len(r[0]) > 0 for r in rows[1:])


def test_bad_weights_exit_2(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sample", "--target", "0.5*N(0,1)+0.4*N(5,1)", "--range", "-10,10",
                 "--block-length", "29", "--n", "10", "--out", str(out)])
    assert code == 2
    assert "0.9" in capsys.readouterr().err
    assert not out.exists()


def test_cftp_demo_example(tmp_path):
    out = tmp_path / "c.csv"
    code = main(["cftp-demo", "--rho", "0.92", "--start", "-100,100", "--reps", "1000",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert rows[0] == ["rep", "sample", "backoff_steps"] and len(rows) == 1001
    assert open(out).read().rstrip().splitlines()[-1] == "# seed=1 reps=1000"


@pytest.mark.parametrize("cmd", sorted(COMMANDS))
def test_help_lists_defaults(cmd, capsys):
    assert main([cmd, "--help"]) == 0
    text = capsys.readouterr().out
    assert "--" in text and "default" in text


@pytest.mark.parametrize("argv", [
    [],
    ["nope"],
    ["sample", "--target", "case1", "--n", "5", "--block-length", "0"],
    ["sample", "--target", "N(0,1", "--range", "-1,1", "--n", "5", "--block-length", "5"],
    ["sample", "--target", "N(0,1)", "--n", "5", "--block-length", "5"],
    ["sample", "--target", "case1", "--range", "3,-3", "--n", "5", "--block-length", "5"],
    ["sweep-block", "--target", "case1", "--reps", "10"],
    ["cftp-demo", "--rho", "1.5"],
    ["coalescence", "--target", "case1", "--counts", "3,10"],
    ["sample", "--target", "case1", "--n", "5", "--block-length", "5", "--threads", "0"],
])
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_runtime_errors_exit_3(tmp_path):
    base = ["--target", "0.5*U(-3,-1)+0.5*U(1,3)", "--range", "-2.5,2.5", "--n", "50",
            "--block-length", "40"]
    assert main(["sample", *base]) == 3
    assert main(["sample", "--target", "case1", "--n", "100", "--block-length", "29",
                 "--max-blocks", "5"]) == 3
    assert main(["cftp-demo", "--reps", "3", "--max-doublings", "1"]) == 3
    assert main(["sample", "--target", "case1", "--n", "1", "--block-length", "29",
                 "--out", str(tmp_path / "missing" / "x.csv")]) == 3


def test_failed_run_leaves_previous_output(tmp_path):
    out = tmp_path / "keep.csv"
    out.write_text("old\n")
    assert main(["sample", "--target", "case1", "--n", "100", "--block-length", "29",
                 "--max-blocks", "5", "--out", str(out)]) == 3
    assert out.read_text() == "old\n"
    assert sorted(os.listdir(tmp_path)) == ["keep.csv"]


def test_seed_env_fallback(tmp_path, monkeypatch):
    args = ["sample", "--target", "case1", "--n", "20", "--block-length", "29"]
    monkeypatch.setenv("ROCFTP_SEED", "17")
    assert main([*args, "--out", str(tmp_path / "env.csv")]) == 0
    monkeypatch.delenv("ROCFTP_SEED")
    assert main([*args, "--seed", "17", "--out", str(tmp_path / "flag.csv")]) == 0
    assert main([*args, "--out", str(tmp_path / "one.csv")]) == 0
    env, flag, one = ((tmp_path / f).read_bytes() for f in ("env.csv", "flag.csv", "one.csv"))
    assert env == flag != one


def test_json_format(tmp_path):
    out = tmp_path / "s.json"
    assert main(["sample", "--target", "case1", "--n", "30", "--block-length", "29",
                 "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["samples"]) == 30
    assert doc["stats"]["coalescent_blocks"] == 31
    assert doc["stats"]["block_length"] == 29


def test_catalog_defaults_and_mir(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["mir", "--target", "case4", "--epsilon", "0.001", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0][:3] == ["epsilon", "level", "mass"]
    assert len(rows) == 4  # three separated mode intervals
    assert float(rows[1][2]) >= 0.999


def test_negative_start_values(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["decay", "--target", "case1", "--starts", "-10,0,10", "--t-max", "20",
                 "--reps", "1000", "--out", str(out)]) == 0
    assert read_rows(out)[0] == ["t", "survive_hat", "log_survive_hat", "tv_bound"]


def test_gof_writes_samples(tmp_path):
    out, xs = tmp_path / "g.csv", tmp_path / "x.csv"
    assert main(["gof", "--target", "case3", "--n", "300", "--out", str(out),
                 "--samples-out", str(xs)]) == 0
    metrics = dict(read_rows(out)[1:])
    assert metrics["block_length"] == "38"
    assert len(read_rows(xs)) == 301


THREADED = [
    ["sample", "--target", "case3", "--n", "200"],
    ["calibrate", "--target", "case1", "--reps", "300"],
    ["sweep-block", "--target", "case1", "--T", "25,35", "--reps", "200"],
    ["coalescence", "--target", "case1", "--counts", "2,10", "--reps", "150"],
    ["decay", "--target", "case1", "--t-max", "40", "--reps", "1000"],
    ["gof", "--target", "case1", "--n", "200"],
    ["cftp-demo", "--reps", "300"],
]


@pytest.mark.parametrize("argv", THREADED, ids=lambda a: a[0])
def test_output_independent_of_threads(tmp_path, argv):
    outs = []
    for k in (1, 2, 4):
        path = tmp_path / f"o{k}.csv"
        assert main([*argv, "--seed", "5", "--threads", str(k), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_console_entry_point(tmp_path):
    out = tmp_path / "c.csv"
    r = subprocess.run([sys.executable, "-m", "rocftp", "cftp-demo", "--reps", "5",
                        "--out", str(out)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert len(read_rows(out)) == 6
