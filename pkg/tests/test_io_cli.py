from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from mixvol import cli, io

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fraction_input_is_exact():
    tup, digest = io.read_input(DATA / "segments3.json")
    assert tup.bodies[2].generators[0][2] == Fraction(1, 2)
    assert len(digest) == 40


def test_bad_input_exits_64(capsys):
    code, out, err = run(capsys, "mixed-volume", "--input", str(DATA / "bad.json"))
    assert code == 64 and "error" in err and out == ""


def test_mixed_volume_report(capsys):
    code, out, _ = run(capsys, "mixed-volume", "--input", str(DATA / "box4.json"), "--exact")
    rep = json.loads(out)
    assert code == 0
    assert rep["bracket_contains_exact"]
    assert rep["mv_lower"] <= rep["mv_exact"] <= rep["mv_upper_certified"]


def test_reports_are_byte_identical(capsys):
    a = run(capsys, "capacity", "--input", str(DATA / "mixed3.json"))
    b = run(capsys, "capacity", "--input", str(DATA / "mixed3.json"))
    assert a == b and a[0] == 0


def test_classical_normalization_is_exact_for_fractions(capsys):
    code, out, _ = run(capsys, "mixed-volume", "--input", str(DATA / "segments3.json"), "--exact",
                       "--normalization", "classical")
    assert json.loads(out)["mv_exact"] == "1/12"


def test_capacity_refuses_decomposable(capsys):
    code, _, err = run(capsys, "capacity", "--input", str(DATA / "segments3.json"))
    assert code == 64 and "mixed-volume" in err


def test_command_flag_form(capsys):
    code, out, _ = run(capsys, "--command", "bounds", "--n", "4", "--k", "2")
    rep = json.loads(out)
    assert code == 0 and rep["table"][0]["lambda"] == 1.0


def test_discriminant_command(capsys):
    code, out, _ = run(capsys, "discriminant", "--input", str(DATA / "ellipses2.json"))
    rep = json.loads(out)
    assert code == 0 and rep["vdw_bracket_holds"]


def test_scale_csv(tmp_path, capsys):
    target = tmp_path / "t.csv"
    code, _, _ = run(capsys, "scale", "--input", str(DATA / "box4.json"), "--output", str(target))
    assert code == 0 and target.read_text().startswith("iteration,")


def test_epsilon_range(capsys):
    code, _, _ = run(capsys, "capacity", "--input", str(DATA / "box4.json"), "--epsilon", "2")
    assert code == 64
