"""Command-line entry point: subcommands, outputs, exit codes."""

import numpy as np
import pytest

from lem import load_csv
from lem.cli import main


CHEAP = """\
[quick]
case = advdiff1d
n = 80
T = 0.5
D = 1, 2
rows = C=1 B=10
"""


def test_run_writes_csv(tmp_path, capsys):
    cfg = tmp_path / "quick.ini"
    cfg.write_text(CHEAP)
    out = tmp_path / "report.csv"
    rc = main(["run", str(cfg), "--out", str(out), "--no-timing"])
    assert rc == 0
    reports = load_csv(str(out))
    assert sorted(r.D for r in reports) == [1, 2]
    assert all(np.isfinite(r.err_l2_rel) for r in reports)
    assert "wrote 2 rows" in capsys.readouterr().out


def test_run_rejects_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[advdiff1d]\noracle = Psychic\nrows = C=1 B=2\n")
    rc = main(["run", str(cfg), "--out", str(tmp_path / "r.csv")])
    assert rc == 1
    assert "unknown oracle" in capsys.readouterr().err


def test_run_rejects_missing_file(tmp_path, capsys):
    rc = main(["run", str(tmp_path / "nope.ini")])
    assert rc == 1


def test_run_rejects_empty_config(tmp_path, capsys):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("")
    rc = main(["run", str(cfg)])
    assert rc == 1
    assert "declares no cases" in capsys.readouterr().err


def test_run_flags_failed_cells(tmp_path, capsys):
    cfg = tmp_path / "failing.ini"
    cfg.write_text(
        "[burgers1d]\nn = 64\nT = 0.5\nmethods = ExpEuler\n"
        "reference_tol = 1e-7\nrows = dt=0.25 B=0\n")
    out = tmp_path / "r.csv"
    rc = main(["run", str(cfg), "--out", str(out), "--no-timing"])
    assert rc == 1
    assert "1 failed runs" in capsys.readouterr().out
    (row,) = load_csv(str(out))
    assert any("run failed" in w for w in row.warnings)


def test_decay_profile(tmp_path, capsys):
    out = tmp_path / "profile.csv"
    rc = main(["decay", "advdiff1d", "--courant", "4", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "distance,max_abs_entry,bound"
    assert len(lines) == 1 + 200  # one row per cyclic distance on 400 nodes
    # entries decay with distance by orders of magnitude
    first = float(lines[1].split(",")[1])
    last = float(lines[-1].split(",")[1])
    assert last < 1e-10 * first


def test_decay_unknown_case(capsys):
    rc = main(["decay", "heat42", "--courant", "1"])
    assert rc == 1
    assert "unknown case" in capsys.readouterr().err


def test_decay_needs_wave_speed(capsys):
    rc = main(["decay", "porous1d", "--courant", "1"])
    assert rc == 1
    assert "no advective speed" in capsys.readouterr().err


def test_subcommand_required():
    with pytest.raises(SystemExit):
        main([])
