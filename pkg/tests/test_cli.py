import json
import subprocess
import sys

import pytest

from qnls.cli import main
from qnls.radial import RadialField


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_resonance(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "check", "--builtin", "kappa", "--kappa", "0.5", "--out", str(tmp_path / "c.json"))
    assert code == 0
    rep = json.loads((tmp_path / "c.json").read_text())
    assert rep["mass_resonance"] is True and rep["ok"]
    assert rep["masses"] == [0.5, 1.0]
    assert all(h["status"] != "fail" for h in rep["hypotheses"].values())
    assert json.loads(out) == rep


def test_check_non_resonant_still_ok(capsys):
    code, out, _ = run_cli(capsys, "check", "--builtin", "kappa", "--kappa", "1.0")
    assert code == 0
    rep = json.loads(out)
    assert rep["mass_resonance"] is False and rep["masses"] == [0.5, 0.5]


def test_custom_polynomial(capsys):
    code, out, _ = run_cli(capsys, "check", "--F", "conj(z1)^2*z2", "--l", "2", "--alpha", "1,1", "--gamma", "1,0.5")
    assert code == 0
    assert json.loads(out)["F"]


def test_parse_error_exit_and_caret(capsys):
    code, _, err = run_cli(capsys, "check", "--F", "z1 +* z2", "--l", "2", "--alpha", "1,1", "--gamma", "1,1")
    assert code == 2
    assert "^" in err and "parse error" in err


def test_dimension_out_of_range(capsys):
    code, _, err = run_cli(capsys, "groundstate", "--builtin", "kappa", "--n", "7")
    assert code == 2 and "dimension out of supported range" in err


def test_missing_system(capsys):
    code, _, err = run_cli(capsys, "groundstate", "--n", "3")
    assert code == 2 and "no system" in err


def test_bad_config_files(capsys, tmp_path):
    (tmp_path / "bad.json").write_text("{nope")
    assert run_cli(capsys, "groundstate", "--config", str(tmp_path / "bad.json"))[0] == 2
    (tmp_path / "extra.json").write_text(json.dumps({"system": {"builtin": "kappa"}, "colour": 1}))
    code, _, err = run_cli(capsys, "groundstate", "--config", str(tmp_path / "extra.json"))
    assert code == 2 and "unknown configuration keys" in err
    (tmp_path / "mismatch.json").write_text(json.dumps({"system": {"builtin": "kappa"}, "concentrate": {}}))
    code, _, err = run_cli(capsys, "groundstate", "--config", str(tmp_path / "mismatch.json"))
    assert code == 2 and "do not match" in err
    assert run_cli(capsys, "groundstate", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_scalar_groundstate_outputs(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "groundstate", "--builtin", "scalar-cubic", "--n", "1", "--M", "4096",
                           "--r-max", "40", "--out", str(tmp_path))
    assert code == 0
    consts = json.loads((tmp_path / "constants.json").read_text())
    assert consts["sharp_constant"] == pytest.approx(0.73253, abs=1e-4)
    assert json.loads((tmp_path / "identities.json").read_text())["passed"]
    prof = RadialField.from_binary(tmp_path / "profile.bin")
    assert prof.grid.M == 4096
    assert (tmp_path / "profile.csv").exists() and (tmp_path / "stabilizer.json").exists()


def test_config_file_equivalent_to_flags(capsys, tmp_path):
    cfg = {"system": {"builtin": "kappa"}, "grid": {"n": 3, "M": 4096, "r_max": 30.0},
           "groundstate": {"tol": 1e-10}}
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    a = run_cli(capsys, "groundstate", "--config", str(tmp_path / "run.json"))
    b = run_cli(capsys, "groundstate", "--builtin", "kappa", "--n", "3", "--M", "4096", "--r-max", "30", "--tol", "1e-10")
    assert a[0] == b[0] == 0
    assert a[1] == b[1]


def test_failed_certification_exit_code(capsys):
    # too coarse for the 1e-4 identity tolerance in R^3
    code, out, _ = run_cli(capsys, "groundstate", "--builtin", "kappa", "--n", "3", "--M", "1024", "--r-max", "30")
    assert code == 1
    assert not json.loads(out)["identities"]["passed"]


def test_outputs_byte_identical_across_runs(capsys, tmp_path):
    args = ["gn-constant", "--builtin", "kappa", "--n", "3", "--M", "1024", "--r-max", "30", "--trials", "20",
            "--seed", "7"]
    run_cli(capsys, *args, "--out", str(tmp_path / "a"))
    run_cli(capsys, *args, "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "constants.json").read_bytes()
    assert a == (tmp_path / "b" / "constants.json").read_bytes()
    assert json.loads(a)["max_trial_ratio"] <= 1 + 1e-6


def test_evolve_gaussian(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "evolve", "--builtin", "kappa", "--n", "3", "--M", "256", "--r-max", "30",
                           "--init", "gaussian", "--amplitudes", "1,1", "--width", "1.5", "--dt", "1e-3", "--T", "0.1",
                           "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "Completed" and rep["Q_drift"] <= 1e-10
    lines = (tmp_path / "diagnostics.csv").read_text().splitlines()
    assert lines[0] == "t,Q,E,K,P,L,Qfunc,I,T,J,Ecrit"
    assert (tmp_path / "final.bin").exists()


def test_evolve_wrong_amplitude_count(capsys):
    code, _, err = run_cli(capsys, "evolve", "--builtin", "kappa", "--n", "3", "--M", "64", "--init", "gaussian",
                           "--amplitudes", "1,1,1", "--T", "0.01")
    assert code == 2 and "amplitudes" in err


def test_classify_rejects_dimension(capsys):
    code, _, err = run_cli(capsys, "classify", "--builtin", "kappa", "--n", "3")
    assert code == 2


def test_classify_n6(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "classify", "--builtin", "kappa", "--n", "6", "--M", "4096", "--r-max", "40",
                           "--scale", "1.1", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "classification.json").read_text())
    assert rep["verdict"] == "BlowupCriteria"
    assert [w["holds"] for w in rep["witnesses"]] == [True, True]


def test_sweep_over_scale(capsys):
    code, out, _ = run_cli(capsys, "classify", "--builtin", "kappa", "--n", "6", "--M", "2048", "--r-max", "30",
                           "--critical-tol", "1e-6", "--sweep", "scale=0.5,1.0,1.2", "--workers", "3")
    assert code == 0
    runs = json.loads(out)["runs"]
    assert [r["report"]["verdict"] for r in runs] == ["Indeterminate", "Indeterminate", "BlowupCriteria"]


def test_sweep_bad_key(capsys):
    code, _, err = run_cli(capsys, "check", "--builtin", "kappa", "--sweep", "M=1,2")
    assert code == 2 and "cannot sweep" in err


def test_concentrate(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "concentrate", "--builtin", "kappa", "--n", "6", "--M", "4096", "--r-max", "40",
                           "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "concentration.json").read_text())
    assert rep["Q_terminal"] == pytest.approx(rep["P_abs"], rel=1e-8)
    assert rep["rescaling"]["idempotence_R"] == pytest.approx(1.0, abs=1e-6)
    assert rep["localized_sobolev"]["passed"]
    assert (tmp_path / "concentration.csv").exists()


def test_divergence_exit_code(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "groundstate", "--builtin", "kappa", "--n", "3", "--M", "256", "--max-iter", "2",
                           "--out", str(tmp_path))
    assert code == 3
    assert "stabilizer_history" in json.loads((tmp_path / "divergence.json").read_text())


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qnls.cli", "check", "--builtin", "kappa", "--kappa", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["system"] == "kappa"
