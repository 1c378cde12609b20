import json

import numpy as np
import pytest

from nearcrit.cli import main, parse_schedule, UsageError


def test_schedule_parser():
    s = parse_schedule("0.5:0.02:geo0.8")
    assert s[0] == pytest.approx(0.5)
    assert s[-1] == pytest.approx(0.5 * 0.8 ** 14)
    assert all(np.diff(s) < 0)
    with pytest.raises(UsageError):
        parse_schedule("0.1:0.5:geo1.25")      # increasing
    with pytest.raises(UsageError):
        parse_schedule("0.5-0.02-geo0.8")


def test_ground_command(tmp_path):
    code = main(["--out", str(tmp_path), "ground", "--p", "5", "--N", "3",
                 "--tol", "1e-8"])
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    consts = json.loads((run_dir / "constants.json").read_text())
    assert consts["a"] == pytest.approx(np.sqrt(3.0), abs=1e-4)
    assert consts["regime"] == "tail-supercritical"
    prof = (run_dir / "profile.csv").read_text().splitlines()
    assert prof[0] == "r,U,V,dU,dV"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["pass"] is True
    assert manifest["command"] == "ground"
    assert set(manifest["outputs"]) == {"profile.csv", "constants.json"}
    for c in manifest["checks"]:
        assert "tolerance" in c


def test_ground_rejects_bad_p(tmp_path):
    code = main(["--out", str(tmp_path), "ground", "--p", "0.5",
                 "--N", "3"])
    assert code == 64


def test_green_command(tmp_path):
    code = main(["--out", str(tmp_path), "green", "--domain", "ball",
                 "--R", "1", "--N", "3", "--x0", "0,0,0"])
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    bundle = json.loads((run_dir / "bundle.json").read_text())
    assert bundle["phi"] == pytest.approx(-0.0795775, abs=1e-7)
    field = (run_dir / "field.csv").read_text().splitlines()
    assert field[0] == "x,y,z,G,Gt"


def test_green_x0_outside(tmp_path):
    code = main(["--out", str(tmp_path), "green", "--domain", "ball",
                 "--R", "1", "--N", "3", "--x0", "2,0,0"])
    assert code == 64


def test_green_subcritical_bundle(tmp_path):
    code = main(["--out", str(tmp_path), "green", "--domain", "ball",
                 "--R", "1", "--N", "3", "--p", "2.5", "--x0", "0,0,0",
                 "--identities"])
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    bundle = json.loads((run_dir / "bundle.json").read_text())
    assert bundle["phi_t"] is not None and bundle["phi_t"] < 0
    assert bundle["residuals"]["identity_ii_rel"] < 1e-3
    assert bundle["q"] == pytest.approx(20.0)


def test_green_box_flagged(tmp_path):
    code = main(["--out", str(tmp_path), "green", "--domain", "box",
                 "--x0", "0.5,0.5,0.5", "--grid", "25"])
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["flags"]["outside_smoothness_hypotheses"] is True


def test_solve_command(tmp_path):
    code = main(["--out", str(tmp_path), "solve", "--p", "5", "--N", "3",
                 "--eps", "0.2", "--domain", "ball", "--R", "1"])
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    data = np.loadtxt(run_dir / "solution.csv", delimiter=",", skiprows=1)
    assert data.shape[1] == 3          # r,u,v
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["checks"][0]["check"] == "pohozaev"
    assert manifest["checks"][0]["pass"] is True


def test_solve_eps_zero_usage(tmp_path):
    code = main(["--out", str(tmp_path), "solve", "--p", "5", "--N", "3",
                 "--eps", "0", "--domain", "ball"])
    assert code == 64


def test_sweep_command(tmp_path):
    code = main(["--out", str(tmp_path), "sweep", "--p", "5", "--N", "3",
                 "--domain", "ball", "--R", "1",
                 "--eps", "0.14:0.02:geo0.75"])
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    fit = json.loads((run_dir / "ratefit.json").read_text())
    assert abs(fit["fitted_exponent"] - 2.0) < 0.1
    assert fit["log_base"] == "natural"
    branch = np.loadtxt(run_dir / "branch.csv", delimiter=",", skiprows=1)
    assert branch.shape[0] == 7
    checks = json.loads((run_dir / "checks.json").read_text())
    assert all("tolerance" in c for c in checks)
    table = (run_dir / "ratetable.csv").read_text().splitlines()
    assert table[0] == "eps,u_max,mu,scaled_value,extrapolated"


def test_sweep_increasing_schedule(tmp_path):
    code = main(["--out", str(tmp_path), "sweep", "--p", "5", "--N", "3",
                 "--eps", "0.1:0.5:geo1.25"])
    assert code == 64


def test_verify_unknown_suite(tmp_path):
    code = main(["--out", str(tmp_path), "verify", "bogus"])
    assert code == 64


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 5, "N": 3, "tol": 1e-8}))
    code = main(["--out", str(tmp_path / "runs"), "--config", str(cfg),
                 "ground"])
    assert code == 0
