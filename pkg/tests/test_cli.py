import json
import os
import subprocess
import sys

import pytest

from mlexpand import reference
from mlexpand.cli import main
from mlexpand.symbolic import SymPoly


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_derive_mle_prints_b1_first(capsys):
    code, out, _ = run(capsys, "derive", "--target", "mle", "--format", "text")
    assert code == 0
    assert out.splitlines()[0] == "B1 = xi1*a2inv"
    assert "S_n =" in out


@pytest.mark.parametrize("target", ["moments", "cumulants", "polys", "cf"])
def test_derive_json_round_trips(capsys, target):
    code, out, _ = run(capsys, "derive", "--target", target, "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["target"] == target and data["objects"]
    for obj in data["objects"]:
        assert obj["terms"]


def test_derive_cf_matches_printed(capsys):
    _, out, _ = run(capsys, "derive", "--target", "cf")
    line = next(l for l in out.splitlines() if l.startswith("A = "))
    assert SymPoly.parse(line[4:]) == reference.REFERENCE["cf.A"]


def test_expect(capsys):
    code, out, _ = run(capsys, "expect", "--monomial", "xi1^8")
    assert code == 0
    assert "eps^0: 105" in out and "eps^2:" in out
    code, _, err = run(capsys, "expect", "--monomial", "eta2")
    assert code == 1 and "monomial" in err


def test_eval_gaussian_is_half(capsys):
    code, out, _ = run(capsys, "eval", "--family", "gaussian", "--n", "50", "--x", "0", "--order", "3")
    assert code == 0 and out.strip() == "G_n(0) = 0.5"


def test_eval_csv_grid(capsys):
    code, out, _ = run(capsys, "eval", "--family", "logistic", "--n", "20", "--grid", "-1:1:1", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x,cdf,clamped" and len(lines) == 4
    assert lines[1].startswith("-1.0,") and "np." not in out


def test_quantile_reports_scale(capsys):
    code, out, _ = run(capsys, "quantile", "--family", "logistic", "--n", "20", "--u", "0.5", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["values"][0]["quantile"] == 0.0
    assert data["scale"] == pytest.approx(3 ** -0.5)


def test_etas(capsys):
    code, out, _ = run(capsys, "etas", "--family", "cauchy", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["raw_a2"] == pytest.approx(0.5) and data["eta2"] == pytest.approx(4.0)


@pytest.mark.parametrize("argv,field", [
    (["eval", "--family", "gaussian", "--x", "0"], "n"),
    (["eval", "--family", "gaussian", "--n", "0", "--x", "0"], "n"),
    (["eval", "--family", "gaussian", "--n", "5", "--x", "0", "--order", "4"], "order"),
    (["eval", "--n", "5", "--x", "0"], "family"),
    (["quantile", "--family", "gaussian", "--n", "5", "--u", "1.5"], "u"),
    (["simulate", "--family", "gaussian", "--n", "5"], "reps"),
    (["derive"], "target"),
    (["eval", "--family", "nope", "--n", "5", "--x", "0"], "nope"),
])
def test_usage_errors(capsys, argv, field):
    code, _, err = run(capsys, *argv)
    assert code == 1 and field in err


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[family]\nversion = 1\nid = logistic\n[run]\nn = 20\norder = 0\n")
    _, out0, _ = run(capsys, "eval", "--config", str(cfg), "--x", "1.5")
    _, out3, _ = run(capsys, "eval", "--config", str(cfg), "--x", "1.5", "--order", "3")
    _, ref0, _ = run(capsys, "eval", "--family", "logistic", "--n", "20", "--x", "1.5", "--order", "0")
    _, gauss, _ = run(capsys, "eval", "--config", str(cfg), "--family", "gaussian", "--x", "1.5", "--order", "3")
    assert out0 == ref0 and out0 != out3
    assert gauss == ref0  # flag family beats config family; order 0 is plain Phi


def test_negative_values_bind_to_flags(capsys):
    code, out, _ = run(capsys, "eval", "--family", "gaussian", "--n", "5", "--x", "-1.5", "--order", "0")
    assert code == 0 and out.startswith("G_n(-1.5) = 0.0668")


def test_simulate_writes_to_env_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MLEXPAND_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "simulate", "--family", "logistic", "--n", "10", "--reps", "10000",
                       "--seed", "1", "--grid", "-1:1:0.5")
    assert code == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["mc_logistic_n10_r10000_s1.csv", "mc_logistic_n10_r10000_s1.json"]
    assert json.loads((tmp_path / files[1]).read_text())["seed"] == 1


def test_simulate_too_few_reps_is_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--family", "logistic", "--n", "10", "--reps", "10",
                       "--out-dir", str(tmp_path))
    assert code == 1 and "reps" in err


def test_end_to_end_determinism(tmp_path, capsys):
    args = ["validate", "--family", "logistic", "--n", "10", "--reps", "10000", "--seed", "9", "--grid", "-2:2:0.5"]
    # at 10^4 reps noise can break monotonicity (exit 2); only repeatability matters here
    first = run(capsys, *args, "--out-dir", str(tmp_path / "a"))
    second = run(capsys, *args, "--out-dir", str(tmp_path / "b"))
    assert first[0] == second[0] and first[0] in (0, 2)
    for name in ("validation.txt", "validation.json", "validation_grid.csv", "validation_plot.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_validate_without_family_notes_not_run(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", "--out-dir", str(tmp_path))
    assert code == 0
    assert out.startswith("PASS")
    assert "Monte Carlo: not run" in out
    assert sorted(p.name for p in tmp_path.iterdir()) == ["validation.json", "validation.txt"]


def test_validate_golden_mismatch_exit_3(tmp_path, capsys, monkeypatch):
    patched = dict(reference.REFERENCE)
    patched["cf.A"] = patched["cf.A"] + SymPoly.parse("1/7*eta5")
    monkeypatch.setattr(reference, "REFERENCE", patched)
    code, out, _ = run(capsys, "validate", "--out-dir", str(tmp_path))
    assert code == 3
    assert out.startswith("FAIL")
    assert "[FAIL] cf.A" in out and "eta5: computed 0, printed 1/7" in out
    report = json.loads((tmp_path / "validation.json").read_text())
    bad = [g for g in report["golden"] if not g["passed"]]
    assert [g["name"] for g in bad] == ["cf.A"] and bad[0]["diff"][0]["monomial"] == "eta5"


def test_unwritable_output_is_reported(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "validate", "--out-dir", str(blocker / "sub"))
    assert code == 2 and "cli-report" in err


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "mlexpand", "derive", "--target", "cf"],
                         capture_output=True, text=True, check=True, env=dict(os.environ))
    assert out.stdout.startswith("A = ")
