import csv
import io
import json
import subprocess
import sys

import pytest

from lrdip import instances as I
from lrdip.cli import PROOFSIZE_FIELDS, RunConfig, cli_main, collapse_pairs, parse_config
from lrdip.adversary import CollapseResult, SweepRow
from lrdip.runtime import ConfigError


@pytest.fixture
def files(tmp_path):
    yes, no = tmp_path / "yes.json", tmp_path / "no.json"
    assert cli_main(["gen", "--n", "64", "--seed", "3", "--out", str(yes)]) == 0
    assert cli_main(["gen", "--n", "64", "--seed", "3", "--no", "--out", str(no)]) == 0
    return tmp_path, yes, no


def test_gen_writes_loadable_instances(files):
    _, yes, no = files
    assert I.load(yes).label == "yes"
    assert I.load(no).label == "no"


def test_gen_to_stdout(capsys):
    assert cli_main(["gen", "--n", "8", "--seed", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 8


@pytest.mark.parametrize("proto", ["double", "iterated", "tradeoff"])
def test_run_yes_accepts(files, capsys, proto):
    _, yes, _ = files
    assert cli_main(["run", "--proto", proto, "--in", str(yes), "--expect", "yes"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "ACCEPT"
    assert out[1].startswith("rounds: ")


def test_run_no_rejects_and_expect_codes(files, capsys):
    _, yes, no = files
    assert cli_main(["run", "--in", str(no)]) == 0
    assert capsys.readouterr().out.startswith("REJECT")
    assert cli_main(["run", "--in", str(no), "--expect", "yes"]) == 1
    assert cli_main(["run", "--in", str(yes), "--expect", "no"]) == 1
    assert cli_main(["run", "--in", str(no), "--expect", "no"]) == 0


@pytest.mark.parametrize("argv", [
    ["run", "--proto", "gt", "--alpha", "5", "--beta", "3"],
    ["run", "--proto", "add", "--alpha", "3", "--beta", "1", "--gamma", "4", "--width", "3"],
    ["run", "--proto", "modadd", "--N", "5", "--alpha", "3", "--beta", "4", "--gamma", "2"],
    ["run", "--proto", "mult", "--alpha", "3", "--beta", "2", "--gamma", "6", "--width", "3"],
    ["run", "--proto", "modmult", "--N", "13", "--alpha", "5", "--beta", "7", "--gamma", "9"],
    ["run", "--proto", "eq2", "--a", "10110", "--b", "10110"],
    ["run", "--proto", "selfreduce", "--a", "1011", "--b", "1011"],
])
def test_run_arithmetic_and_string_protocols(argv, capsys):
    assert cli_main(argv + ["--expect", "yes"]) == 0
    assert capsys.readouterr().out.startswith("ACCEPT")


@pytest.mark.parametrize("argv,needle", [
    (["run", "--proto", "nope", "--in", "x"], "valid: gt, add"),
    (["run", "--prover", "nope", "--in", "x"], "valid: honest, misclassify"),
    (["run", "--n-mode", "sideways", "--in", "x"], "valid: exact, upper"),
    (["run", "--proto", "gt", "--alpha", "1"], "--beta"),
    (["run", "--proto", "double"], "--in"),
    (["run", "--in", "/nonexistent/file.json"], "error"),
    (["gen", "--n", "1"], "n"),
    (["proofsize", "--n-range", "8"], "a:b"),
    (["frobnicate"], "invalid choice"),
])
def test_configuration_errors_exit_two(argv, needle, capsys):
    assert cli_main(argv) == 2
    assert needle in capsys.readouterr().err


def test_iterated_at_threshold_two_is_a_configuration_error(files, capsys):
    tmp, _, _ = files
    big = tmp / "big.json"
    cli_main(["gen", "--n", "1024", "--out", str(big)])
    assert cli_main(["run", "--proto", "iterated", "--T", "2", "--in", str(big)]) == 2
    assert "layers" in capsys.readouterr().err


def test_upper_mode_defaults_to_twice_n():
    cfg = parse_config(["run", "--in", "x", "--n-mode", "upper"])
    inst = I.generate_yes_instance(50, 0)
    from lrdip.cli import lr_protocol
    assert lr_protocol(cfg, inst).lg == 7  # ceil log2 of 100


def test_transcript_replay_identical(files, capsys):
    tmp, _, no = files
    tr = tmp / "t.txt"
    assert cli_main(["run", "--in", str(no), "--prover", "fp-lie", "--seed", "9", "--save-transcript", str(tr)]) == 0
    capsys.readouterr()
    assert cli_main(["run", "--replay", str(tr)]) == 0
    assert "replay: identical" in capsys.readouterr().out


def test_replay_detects_tampering(files, capsys):
    tmp, yes, _ = files
    tr = tmp / "t.txt"
    cli_main(["run", "--in", str(yes), "--seed", "2", "--save-transcript", str(tr)])
    lines = tr.read_text().splitlines()
    head = json.loads(lines[0][2:])
    head["verdict"] = "REJECT"
    tr.write_text("# " + json.dumps(head) + "\n" + "\n".join(lines[1:]) + "\n")
    capsys.readouterr()
    assert cli_main(["run", "--replay", str(tr)]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_replay_missing_header(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("no header\n")
    assert cli_main(["run", "--replay", str(bad)]) == 2


def test_proofsize_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert cli_main(["proofsize", "--proto", "double", "--n-range", "64:256", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == PROOFSIZE_FIELDS
    assert [int(r[1]) for r in rows[1:]] == [64, 128, 256]
    assert all(r[2] == "3" for r in rows[1:])
    assert all(max(map(int, r[5].split(";"))) == int(r[3]) for r in rows[1:])


def test_proofsize_rejects_arithmetic_protocols():
    assert cli_main(["proofsize", "--proto", "gt", "--n-range", "4:8"]) == 2


def test_soundness_csv(tmp_path):
    out = tmp_path / "s.csv"
    argv = ["soundness", "--proto", "double", "--sizes", "32,64", "--trials", "10", "--strategies",
            "honest,fp-lie", "--out", str(out)]
    assert cli_main(argv) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == SweepRow.FIELDS
    assert [(r[1], r[3]) for r in rows[1:]] == [("32", "honest"), ("32", "fp-lie"), ("64", "honest"), ("64", "fp-lie")]


def test_attack_csv(tmp_path):
    out = tmp_path / "a.csv"
    assert cli_main(["attack", "--ell", "32", "--pairs", "4", "--draws", "50", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == CollapseResult.FIELDS
    assert rows[1][0] == "32" and rows[1][3] == "50"


def test_collapse_pairs_deterministic_and_unequal():
    a = collapse_pairs(16, 10, 3)
    assert a == collapse_pairs(16, 10, 3)
    assert all(len(x) == len(y) == 16 and x != y for x, y in a)


def test_config_is_a_dataclass_with_validation():
    with pytest.raises(ConfigError):
        RunConfig(trials=0).validate()
    with pytest.raises(ConfigError):
        RunConfig(expect="maybe").validate()


def test_console_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "lrdip", "gen", "--n", "4"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.load(io.StringIO(res.stdout))["n"] == 4
    res = subprocess.run([sys.executable, "-m", "lrdip", "run", "--proto", "zzz"], capture_output=True, text=True)
    assert res.returncode == 2
