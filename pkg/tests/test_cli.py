import csv
import io
import json

import pytest

from di_lab import cli
from di_lab.simulator import CSV_COLUMNS


@pytest.fixture
def bern(tmp_path):
    p = tmp_path / "bern.json"
    p.write_text(json.dumps({"family": "bernoulli", "params": {}}))
    return str(p)


def test_construct_ok(bern, capsys):
    assert cli.run(["construct", "--channel", bern, "--n", "8", "--delta", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 8


@pytest.mark.parametrize("argv,with_channel", [
    (["construct", "--alpha", "0.6", "--n", "8"], True),
    (["construct", "--t", "0", "--n", "8"], True),
    (["construct", "--n", "8"], False),                     # missing channel
    (["evaluate", "--n", "4", "--trials", "50"], True),
    (["construct", "--n", "4", "--delta", "9"], True),      # outside the typicality window
    (["superactivate", "--m", "3,1"], False),
])
def test_invalid_exit_1(bern, argv, with_channel, capsys):
    if with_channel:
        argv = argv + ["--channel", bern]
    assert cli.run(argv) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and err.count("\n") == 1


def test_unknown_subcommand():
    assert cli.run(["nonsense"]) == 1


def test_bad_channel_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.run(["construct", "--channel", str(p)]) == 1
    assert cli.run(["construct", "--channel", str(tmp_path / "missing.json")]) == 1


def test_scaling_csv(bern, capsys):
    assert cli.run(["scaling", "--channel", bern, "--n-list", "4,8", "--format", "csv",
                    "--targets", "0.5,0.5", "--trials", "200", "--pair-budget", "5"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r[0] for r in rows[1:]] == ["4", "8"]


def test_selftest_passes(tmp_path):
    out = tmp_path / "self.json"
    assert cli.run(["selftest", "--trials", "20000", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["all_passed"]


def test_replay_bytes(bern, tmp_path):
    out = tmp_path / "ev.json"
    argv = ["evaluate", "--channel", bern, "--n", "6", "--delta", "1", "--trials", "500",
            "--pair-budget", "10", "--seed", "4", "--out", str(out)]
    assert cli.run(argv) == 0
    man = tmp_path / "ev.json.manifest.json"
    assert json.loads(man.read_text())["channel_spec"]["family"] == "bernoulli"
    again = tmp_path / "again.json"
    assert cli.run(["replay", str(man), "--out", str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_evaluate_from_code_file(bern, tmp_path):
    code = tmp_path / "code.json"
    assert cli.run(["construct", "--channel", bern, "--n", "6", "--delta", "1", "--out", str(code)]) == 0
    res = tmp_path / "res.json"
    assert cli.run(["evaluate", "--code", str(code), "--trials", "300", "--exact", "--out", str(res)]) == 0
    assert "lambda1_hat" in res.read_text()
