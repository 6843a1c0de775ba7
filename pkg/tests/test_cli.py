import json
import math

import pytest

from ruinlab.cli import main

BETA2 = {
    "version": 1,
    "seed": 42,
    "model": {
        "claim": {"kind": "exponential", "rate": 1.0},
        "interarrival": {"kind": "exponential", "rate": 1.0},
        "premium": {"mode": "constant", "c": 0.1},
        "regime": {"mode": "constant",
                   "theta": {"kind": "point", "mu": 0.06, "half_sigma2": 0.02}},
        "mu_lower": 0.06, "sigma_upper": 0.2, "c_bar": 0.1,
    },
}


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_lundberg_golden_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "version": 1,
        "model": {
            "claim": {"kind": "exponential", "rate": 1.0},
            "interarrival": {"kind": "exponential", "rate": 1.0},
            "premium": {"mode": "zero"},
            "regime": {"mode": "constant", "theta": {"kind": "zeta", "p": 4}},
            "mu_lower": 0.0, "sigma_upper": 1.4142135623730951, "c_bar": 0.0,
        },
    })
    assert main(["lundberg", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["q_plus"] == pytest.approx(0.6180339887, abs=1e-9)
    assert doc["status"] == "no_root"
    assert doc["endpoint_verdict"] == "endpoint_finite"


def test_lundberg_beta2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BETA2)
    assert main(["lundberg", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["beta"] == pytest.approx(2.0, abs=1e-9)
    assert doc["hypothesis_flags"]["cond_tau_ok"] is True


def test_missing_field_names_path(tmp_path, capsys):
    bad = {"version": 1, "model": {k: v for k, v in BETA2["model"].items()
                                   if k != "claim"}}
    assert main(["lundberg", "--config", write_cfg(tmp_path, bad)]) == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"] == "config"
    assert "claim" in doc["field"]


def test_unknown_key_rejected(tmp_path, capsys):
    bad = dict(BETA2)
    bad["model"] = dict(BETA2["model"], typo_key=1)
    assert main(["lundberg", "--config", write_cfg(tmp_path, bad)]) == 2
    assert "typo_key" in capsys.readouterr().out


def test_hypothesis_violation_exit_code(tmp_path, capsys):
    bad = dict(BETA2)
    bad["model"] = dict(BETA2["model"],
                        regime={"mode": "constant",
                                "theta": {"kind": "point", "mu": 0.01,
                                          "half_sigma2": 0.02}},
                        mu_lower=0.01)
    assert main(["lundberg", "--config", write_cfg(tmp_path, bad)]) == 3
    doc = json.loads(capsys.readouterr().out)
    assert doc["error"] == "hypothesis_violation"
    assert doc["condition"] == "mean_drift_positive"


def test_ruin_rejects_negative_loading(tmp_path, capsys):
    bad = dict(BETA2)
    bad["model"] = dict(BETA2["model"])
    del bad["model"]["regime"]
    bad["model"]["premium"] = {"mode": "constant", "c": 0.5}
    bad["model"]["c_bar"] = 0.5
    cfg = write_cfg(tmp_path, bad)
    assert main(["ruin", "--config", cfg, "--u", "5", "--paths", "1000"]) == 3
    doc = json.loads(capsys.readouterr().out)
    assert doc["condition"] == "safety_loading"


def test_ruin_outputs_deterministic(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BETA2)
    args = ["ruin", "--config", cfg, "--u", "5,10", "--paths", "3000",
            "--seed", "9", "--workers", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    a = (tmp_path / "a.csv").read_bytes()
    b = (tmp_path / "b.csv").read_bytes()
    assert a == b
    header = a.decode().splitlines()[0]
    assert header == "u,psi_hat,ci_halfwidth,censored_fraction"


def test_seed_env_override(tmp_path, capsys, monkeypatch):
    cfg = write_cfg(tmp_path, BETA2)
    args = ["ruin", "--config", cfg, "--u", "5", "--paths", "2000",
            "--workers", "1"]
    monkeypatch.setenv("RUINLAB_SEED", "123")
    main(args + ["--out", str(tmp_path / "env1")])
    monkeypatch.setenv("RUINLAB_SEED", "124")
    main(args + ["--out", str(tmp_path / "env2")])
    monkeypatch.setenv("RUINLAB_SEED", "123")
    main(args + ["--out", str(tmp_path / "env3")])
    capsys.readouterr()
    one = (tmp_path / "env1.csv").read_bytes()
    assert one != (tmp_path / "env2.csv").read_bytes()
    assert one == (tmp_path / "env3.csv").read_bytes()


def test_simulate_dump_columns(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BETA2)
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--config", cfg, "--u", "5", "--steps", "10",
                 "--seed", "3", "--dump", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert lines[0] == "n,s_n,lambda_n,zeta_n,nu_n"
    assert lines[1].startswith("0,5")
    row = lines[2].split(",")
    lam, nu = float(row[2]), float(row[4])
    assert lam == pytest.approx(math.exp(-nu), rel=1e-9)  # 12-digit CSV cells


def test_perpetuity_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path, BETA2)
    assert main(["perpetuity", "--config", cfg, "--samples", "20000",
                 "--seed", "4", "--workers", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["beta_used"] == pytest.approx(2.0, abs=1e-9)
    assert doc["c_hat"] > 0
    assert doc["ks"] <= 0.05
    assert -2.6 <= doc["tail_slope"] <= -1.0
