import json
import subprocess
import sys
from pathlib import Path

import pytest

from rockland.cli import main
from rockland.lie import builtin
from rockland.uea import parse_element

SPECS = Path(__file__).resolve().parents[1] / "specs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_algebra_validate_ok(capsys):
    code, out, _ = run(capsys, "algebra", "validate", SPECS / "heisenberg.json")
    assert code == 0
    body = json.loads(out)
    assert body["violations"] == [] and body["config"]["command"] == "algebra validate"


def test_algebra_validate_violation(capsys):
    code, out, _ = run(capsys, "algebra", "validate", SPECS / "bad_jacobi.json")
    assert code == 1
    assert any(v["kind"] == "jacobi" for v in json.loads(out)["violations"])


def test_algebra_info_builtin(capsys):
    code, out, _ = run(capsys, "algebra", "info", "engel")
    assert code == 0 and json.loads(out)["homogeneous_dimension"] == 7


def test_malformed_file_names_position(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text('{"basis": ["X"],\n "degrees": [1,]}')
    code, _, err = run(capsys, "algebra", "validate", bad)
    assert code == 2
    assert "broken.json" in err and "line 2" in err


def test_malformed_operator(tmp_path, capsys):
    bad = tmp_path / "op.json"
    bad.write_text('{"algebra": "heisenberg1", "order": 2, "terms": [{"coeff": "sin(", "word": "XX"}]}')
    code, _, err = run(capsys, "rockland", "check", bad)
    assert code == 2 and "op.json" in err


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["algebra", "validate"]) == 2


def test_uea_normal_order(capsys):
    code, out, _ = run(capsys, "uea", "normal-order", "heisenberg1", "YX")
    assert code == 0
    H = builtin("heisenberg1")
    assert parse_element(json.loads(out)["normal_form"], H).is_close(parse_element("1 · X Y + -1 · T", H))
    assert run(capsys, "uea", "normal-order", "heisenberg1", "XQ")[0] == 2


def test_rockland_check_f2(capsys):
    code, out, _ = run(capsys, "rockland", "check", SPECS / "op_f2.json", "--n-max", 200, "--samples", 4)
    body = json.loads(out)
    assert code == 0
    assert body["c_P"] == pytest.approx(1 / 3, abs=1e-9) and body["elliptic"]
    assert json.loads(run(capsys, "rockland", "check", SPECS / "op_f1.json", "--samples", 2)[1])["elliptic"] is False


def test_partition_build_and_verify(tmp_path, capsys):
    args = ("--eps", 1, "--box", "2:2,-1:1,-1:1", "--samples", 300, "--out", tmp_path)
    code, out, _ = run(capsys, "partition", "build", "heisenberg1", *args)
    assert code == 0
    assert json.loads(out)["stats"]["ok"]
    dump = tmp_path / "partition_build.json"
    assert dump.exists()
    code, out, _ = run(capsys, "partition", "verify", dump, "--samples", 300)
    assert code == 0 and json.loads(out)["stats"]["max_identity_error"] < 1e-10


def test_estimate_forward_csv(capsys):
    argv = ("estimate", "forward", SPECS / "op_b.json", "--grid", 8, "--c", "10,50", "--n-tests", 4)
    code, out, _ = run(capsys, *argv)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "mode,s,c,grid,min_ratio,max_ratio" and len(lines) == 3
    assert all(float(line.split(",")[4]) > 0 for line in lines[1:])
    # identical configuration gives byte-identical CSV
    assert run(capsys, *argv)[1] == out


def test_estimate_shift_scan(tmp_path, capsys):
    argv = ("estimate", "forward", SPECS / "op_b.json", "--grid", 8, "--c", "log:0.1:100:4", "--target", 2)
    code, out, err = run(capsys, *argv, "--n-tests", 2, "--out", tmp_path)
    assert code == 0 and len(out.strip().splitlines()) == 5
    assert "smallest admissible c" in err
    assert json.loads((tmp_path / "estimate_forward.json").read_text())["smallest_admissible_c"]["8"] == pytest.approx(10.0)
    assert run(capsys, "estimate", "localize", SPECS / "op_b.json", "--grid", 4, "--target", 1)[0] == 2


def test_estimate_localize(capsys):
    code, out, _ = run(capsys, "estimate", "localize", SPECS / "op_b.json", "--grid", 8, "--n-tests", 2)
    assert code == 0
    row = out.strip().splitlines()[1].split(",")
    assert abs(float(row[4]) - 1) < 1e-8


def test_out_files_not_overwritten_without_force(tmp_path, capsys):
    argv = ["positivity", SPECS / "op_neg_laplacian.json", "--N", 10, "--grid", 4, "--out", tmp_path]
    assert run(capsys, *argv)[0] == 0
    report = tmp_path / "positivity.json"
    first = report.read_text()
    code, out, err = run(capsys, *argv)
    assert code == 2 and "--force" in err and out == ""
    assert report.read_text() == first
    assert run(capsys, *argv, "--force")[0] == 0


def test_positivity_reports(capsys):
    code, out, _ = run(capsys, "positivity", SPECS / "op_iT.json", "--N", 10, "--grid", 4)
    body = json.loads(out)
    assert code == 0 and not body["group_positive"] and not body["rep_positive"] and body["consistent"]
    assert run(capsys, "positivity", SPECS / "op_b.json")[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rockland", "algebra", "info", "heisenberg1"], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["dim"] == 3
