import json
import os
import subprocess
import sys

import pytest

BIN = [sys.executable, "-m", "endosim.cli"]


def run_cli(*args, **kw):
    return subprocess.run(BIN + list(args), capture_output=True, text=True, **kw)


def test_list_scenarios_and_schema():
    out = run_cli("list-scenarios")
    assert out.returncode == 0
    for sid in ("fig1-pure-coag", "trafficking-LHR-H2", "signaling-PTH7D-H1"):
        assert sid in out.stdout
    out = run_cli("schema")
    assert out.returncode == 0
    assert "kernel.form" in out.stdout and "V.profile" in out.stdout


def test_run_unknown_scenario_exit_1():
    out = run_cli("run", "not-a-scenario", "--out", "/tmp/endosim-nope")
    assert out.returncode == 1
    assert "config error" in out.stderr


def test_run_numeric_abort_exit_2(tmp_path):
    out = run_cli("run", "fig1-pure-coag", "--out", str(tmp_path),
                  "--set", "dt=1e9", "--set", "time.T=2e9",
                  "--set", "numerics.negativity=abort")
    assert out.returncode == 2
    assert "numeric abort" in out.stderr


def test_run_writes_artifacts_and_manifest(tmp_path):
    out = run_cli("run", "fig5-pure-coag", "--out", str(tmp_path), "--set", "T=0.005")
    assert out.returncode == 0, out.stderr
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["scenario"] == "fig5-pure-coag"
    # every effective parameter is echoed, defaults included
    assert man["parameters"]["numerics.quadrature"] == "midpoint"
    assert man["parameters"]["time.dt"] == "0.00050000000000000001"
    for name in man["files"]:
        p = tmp_path / name
        assert p.exists() and p.stat().st_size > 0
    header = (tmp_path / "diagnostics.csv").read_text().splitlines()[0]
    assert header == "n,t,H0,H1r,H1a,M"
    snap = (tmp_path / "snapshot_t0.csv").read_text().splitlines()
    assert snap[0] == "i,j,r_center,a_center,f"
    assert snap[1].startswith("1,1,")


def test_run_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        out = run_cli("run", "fig5-pure-coag", "--out", str(d), "--set", "T=0.005")
        assert out.returncode == 0
    for name in ("diagnostics.csv", "snapshot_t0.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_trafficking_observables_columns(tmp_path):
    out = run_cli("run", "trafficking-B2AR-H2", "--out", str(tmp_path),
                  "--set", "T=2", "--set", "time.snapshots=")
    assert out.returncode == 0, out.stderr
    header = (tmp_path / "observables.csv").read_text().splitlines()[0]
    assert header == "t,mean_size,size_std,internalization_ratio"
    # absent mean while the population is empty: empty cell, not 0/0
    first = (tmp_path / "observables.csv").read_text().splitlines()[1]
    assert first.split(",")[1] == ""


def test_analyze_condition_check(tmp_path):
    out = run_cli("analyze", "condition-check", "fig8-stable", "--out", str(tmp_path))
    assert out.returncode == 0
    rep = json.loads((tmp_path / "condition.json").read_text())
    assert rep["holds"] is True
    out = run_cli("analyze", "condition-check", "fig8-violated", "--out", str(tmp_path))
    rep = json.loads((tmp_path / "condition.json").read_text())
    assert rep["holds"] is False


def test_analyze_moments_vs_ode_requires_affine(tmp_path):
    out = run_cli("analyze", "moments-vs-ode", "fig1-pure-coag", "--out",
                  str(tmp_path), "--set", "T=0.01", "--set", "time.snapshots=")
    assert out.returncode == 0, out.stderr
    rep = json.loads((tmp_path / "moments_vs_ode.json").read_text())
    assert rep["max_relerr_H0"] < 0.05


def test_analyze_convergence_small(tmp_path):
    out = run_cli("analyze", "convergence", "fig5-pure-coag", "--out", str(tmp_path),
                  "--levels", "2", "--ref-level", "3", "--quadrature", "gauss8")
    assert out.returncode == 0, out.stderr
    rep = json.loads((tmp_path / "convergence.json").read_text())
    assert len(rep["levels"]) == 2 and rep["reference_I"] == 48


def test_env_output_root(tmp_path):
    env = dict(os.environ, ENDOSIM_OUT=str(tmp_path))
    out = run_cli("analyze", "condition-check", "fig8-stable", env=env)
    assert out.returncode == 0
    assert (tmp_path / "condition-check-fig8-stable" / "condition.json").exists()
