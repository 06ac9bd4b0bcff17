import csv
import json

import numpy as np
import pytest

from seaqt.cli import EXIT_AUDIT, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_OK, main, run_command
from seaqt.config import build_state, load_config, parse_config, shipped_config

QUBIT = {"type": "qubit", "omega": 1.0, "h": [0, 0, 1], "tau": 1.0}


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_qubit_demo_reaches_ln2(tmp_path):
    assert main(["qubit-demo", "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "qubit_demo.csv")))
    assert rows[0] == ["t", "r_x", "r_y", "r_z", "|r|", "s", "ds/dt"]
    assert float(rows[1][4]) == pytest.approx(0.5, abs=1e-15)
    summary = json.load(open(tmp_path / "summary.json"))
    assert summary["entropy_gap_to_ln2"] < 1e-6
    assert summary["classification"] == "converged-to-TE"


def test_backward_simulation(tmp_path):
    code = main(["simulate", "--config", str(shipped_config("qubit_backward.json")), "--out", str(tmp_path)])
    assert code == EXIT_OK
    summary = json.load(open(tmp_path / "summary.json"))
    assert summary["status"] == "boundary-approached"
    rows = list(csv.DictReader(open(tmp_path / "trajectory.csv")))
    s = [float(r["entropy"]) for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(s, s[1:]))
    assert float(rows[-1]["t"]) < 0


def test_deterministic_csv(tmp_path):
    cfg = {"model": QUBIT, "initial_state": {"kind": "random"}, "time": {"t_final": 2.0, "sample_every": 0.5}}
    path = _write(tmp_path, cfg)
    main(["simulate", "--config", path, "--out", str(tmp_path / "a"), "--seed", "5"])
    main(["simulate", "--config", path, "--out", str(tmp_path / "b"), "--seed", "5"])
    main(["simulate", "--config", path, "--out", str(tmp_path / "c"), "--seed", "6"])
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a != (tmp_path / "c" / "trajectory.csv").read_bytes()
    # 17 significant digits
    assert any(len(x.replace("-", "").replace(".", "").lstrip("0")) >= 15 for x in a.decode().splitlines()[1].split(","))


@pytest.mark.parametrize(
    "cfg",
    [
        {"model": dict(QUBIT, tau=-1.0), "initial_state": {"kind": "bloch", "r": [0.5, 0, 0]}},
        {"model": dict(QUBIT, tau=0.0), "initial_state": {"kind": "bloch", "r": [0.5, 0, 0]}},
        {"model": QUBIT, "initial_state": {"kind": "bloch", "r": [0.9, 0.9, 0]}},
        {"model": QUBIT, "initial_state": {"kind": "bogus"}},
        {"model": {"type": "single", "hamiltonian": [[1, 0], [0, 2]]}, "initial_state": {"kind": "diagonal", "populations": [0.2, 0.3, 0.5]}},
        {"model": QUBIT, "initial_state": {"kind": "bloch", "r": [0.1, 0, 0]}, "integrator": {"method": "euler"}},
        {"initial_state": {"kind": "bloch", "r": [0.1, 0, 0]}},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG


def test_equilibrium(tmp_path):
    assert main(["equilibrium", "--config", str(shipped_config("qubit_equilibrium.json")), "--out", str(tmp_path)]) == EXIT_OK
    out = json.load(open(tmp_path / "equilibrium.json"))
    assert out["beta"] == pytest.approx(np.log(3), abs=1e-10)
    assert out["stationary"]
    sym = _write(tmp_path, {"model": QUBIT, "equilibrium": {"energy_mean": 0.5}}, "sym.json")
    assert main(["equilibrium", "--config", sym, "--out", str(tmp_path / "s")]) == EXIT_OK
    assert json.load(open(tmp_path / "s" / "equilibrium.json"))["beta"] == pytest.approx(0.0, abs=1e-12)


def test_equilibrium_infeasible(tmp_path):
    path = _write(tmp_path, {"model": QUBIT, "equilibrium": {"energy_mean": 1.5}})
    assert main(["equilibrium", "--config", path, "--out", str(tmp_path)]) == EXIT_INFEASIBLE


def test_numeric_failure_exit_3(tmp_path):
    cfg = {"model": QUBIT, "initial_state": {"kind": "bloch", "r": [0.5, 0, 0]}, "time": {"t_final": 50.0},
           "integrator": {"max_steps": 2}}
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_onsager_command(tmp_path):
    assert main(["onsager", "--config", str(shipped_config("three_level.json")), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.load(open(tmp_path / "onsager.json"))
    assert rep["residuals"]["gram_vs_fLf"] < 1e-7
    assert rep["residuals"]["L_symmetry"] < 1e-12
    comp = str(shipped_config("two_qubits.json"))
    assert main(["onsager", "--config", comp, "--out", str(tmp_path / "c")]) == EXIT_CONFIG


def test_simulate_with_analyses_and_json(tmp_path):
    code = main(["simulate", "--config", str(shipped_config("three_level.json")), "--out", str(tmp_path), "--format", "json"])
    assert code == EXIT_OK
    summary = json.load(open(tmp_path / "summary.json"))
    assert summary["roundtrip"]["roundtrip_error"] < 1e-6
    assert summary["classification"] == "converged-to-TE"
    assert (tmp_path / "trajectory.json").exists()
    assert summary["max_energy_drift"] < 1e-7


def test_composite_simulation(tmp_path):
    assert main(["simulate", "--config", str(shipped_config("two_qubits.json")), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.load(open(tmp_path / "summary.json"))
    assert summary["max_energy_drift"] < 1e-7 and summary["min_entropy_increment"] >= -1e-9


def test_initial_state_constructors():
    model = parse_config({"model": {"type": "composite", "dims": [2, 2], "local_hamiltonians": [[[0, 0], [0, 1]]] * 2},
                          "initial_state": {"kind": "pure", "vector": [1, 0, 0, 1]}}).model
    assert build_state({"kind": "pure", "vector": [1, 0, 0, 1]}, model).rank == 1
    g = build_state({"kind": "gibbs", "beta": 0.0}, model)
    assert np.allclose(g.op, np.eye(4) / 4)
    m = build_state({"kind": "matrix", "matrix": [[0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]}, model)
    assert m.kernel_dim == 2


def test_audit_command(tmp_path, capsys):
    assert main(["audit", "--out", str(tmp_path)]) == EXIT_OK
    assert json.load(open(tmp_path / "audit.json"))["passed"]
    bad = _write(tmp_path, {"model": dict(QUBIT, tau=-1), "initial_state": {"kind": "bloch", "r": [0.5, 0, 0]}})
    assert main(["audit", "--config", bad, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_audit_fails_on_mutation(tmp_path, monkeypatch):
    import seaqt.cli as cli
    from seaqt import audit

    monkeypatch.setattr(cli, "run_audit", lambda: audit.run_audit(-1.0, ("monotonicity",)))
    assert main(["audit", "--out", str(tmp_path)]) == EXIT_AUDIT
    assert "entropy monotonicity" in json.load(open(tmp_path / "audit.json"))["failed"]


def test_sweep(tmp_path):
    good = {"model": QUBIT, "initial_state": {"kind": "bloch", "r": [0.3, 0, 0.2]}, "time": {"t_final": 1.0, "sample_every": 0.5}}
    bad = dict(good, model=dict(QUBIT, tau=-2))
    sweep = _write(tmp_path, {"configs": [good, good]}, "sweep.json")
    assert main(["simulate", "--sweep", sweep, "--out", str(tmp_path / "o"), "--workers", "2"]) == EXIT_OK
    assert (tmp_path / "o" / "run_000" / "trajectory.csv").read_bytes() == (tmp_path / "o" / "run_001" / "trajectory.csv").read_bytes()
    sweep2 = _write(tmp_path, [good, bad], "sweep2.json")
    assert main(["simulate", "--sweep", sweep2, "--out", str(tmp_path / "p"), "--workers", "2"]) == EXIT_CONFIG


def test_model_file_reference(tmp_path):
    (tmp_path / "model.json").write_text(json.dumps(QUBIT))
    path = _write(tmp_path, {"model": "model.json", "initial_state": {"kind": "bloch", "r": [0.2, 0, 0]}})
    cfg = load_config(path)
    assert cfg.bloch is not None


def test_run_command_accepts_dict(tmp_path):
    cfg = {"model": QUBIT, "initial_state": {"kind": "bloch", "r": [0.2, 0, 0]}, "time": {"t_final": 0.5}}
    assert run_command("simulate", cfg, tmp_path) == EXIT_OK
