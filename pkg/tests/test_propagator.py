import json

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import random_model_pair
from oracles import lstsq_dissipator
from seaqt.errors import Infeasible, KernelViolation, MaxStepsExceeded, StepRejected
from seaqt.generator import SystemModel
from seaqt.operators import as_state, entropy, gibbs_state, random_density, trace_distance
from seaqt.propagator import (
    IntegratorConfig,
    Trajectory,
    evolve,
    find_equilibrium,
    perturb_kernel,
    roundtrip_error,
    stability_probe,
    step,
)
from seaqt.qubit import BlochModel, bloch_to_density


def _oracle_rhs(h, cons, tau):
    d = h.shape[0]

    def f(t, y):
        rho = np.ascontiguousarray(y).view(complex).reshape(d, d)
        diss, _ = lstsq_dissipator(rho, cons, tau)
        return (-1j * (h @ rho - rho @ h) + diss).ravel().view(float)

    return f


def test_evolve_matches_independent_ode_solution(rng):
    h, extra = random_model_pair(rng, 3, with_number=True)
    rho0 = random_density(3, rng)
    model = SystemModel(h, extra, 0.8)
    traj = evolve(rho0, model, 2.0, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12), sample_times=[1.0, 2.0])
    sol = solve_ivp(_oracle_rhs(h, [h] + extra, 0.8), (0, 2), rho0.astype(complex).ravel().view(float),
                    method="DOP853", rtol=1e-11, atol=1e-13, t_eval=[1.0, 2.0])
    for k, s in enumerate(traj.samples[1:]):
        ref = np.ascontiguousarray(sol.y[:, k]).view(complex).reshape(3, 3)
        assert np.max(np.abs(s.state.op - ref)) < 1e-7


def test_conservation_and_monotonicity(rng):
    h, extra = random_model_pair(rng, 4, with_number=True)
    model = SystemModel(h, extra)
    traj = evolve(random_density(4, rng), model, 8.0)
    s = traj.summary()
    assert s["max_trace_drift"] < 1e-9
    assert s["max_energy_drift"] < 1e-7
    assert s["max_N1_drift"] < 1e-7
    assert s["min_entropy_increment"] >= -1e-9
    assert traj.samples[-1].audit.entropy > traj.samples[0].audit.entropy


def test_backward_run_reaches_boundary():
    m = BlochModel(1.0, [0, 0, 1], 1.0).to_system_model()
    traj = evolve(bloch_to_density([0.5, 0, 0]), m, -20.0)
    assert traj.status == "boundary-approached"
    ent = traj.column("entropy")
    assert np.all(np.diff(ent) <= 1e-9)
    assert traj.final.eigenvalues[-1] < 1e-9


def test_roundtrip_and_composition(rng):
    h, _ = random_model_pair(rng, 3)
    rep = roundtrip_error(random_density(3, rng), SystemModel(h), 1.0)
    assert rep.roundtrip_error < 1e-6 and rep.composition_error < 1e-6


def test_converged_runs_switch_to_unitary():
    h = np.diag([0.0, 1.0, 2.0])
    rho = gibbs_state(h, 0.5)
    traj = evolve(rho, SystemModel(h), 10.0, sample_every=1.0)
    assert traj.status == "converged"
    assert len(traj.samples) == 11
    assert np.allclose(traj.final.op, rho, atol=1e-14)


def test_rk4_fixed_agrees_with_adaptive(rng):
    h, _ = random_model_pair(rng, 2)
    rho = random_density(2, rng)
    a = evolve(rho, SystemModel(h), 1.0, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)).final.op
    b = evolve(rho, SystemModel(h), 1.0, IntegratorConfig(method="rk4_fixed", dt_init=1e-3)).final.op
    assert np.max(np.abs(a - b)) < 1e-9


def test_kernel_dimension_is_conserved(rng):
    h, _ = random_model_pair(rng, 4)
    traj = evolve(random_density(4, rng, rank=2), SystemModel(h), 5.0, sample_every=0.5)
    assert {s.audit.kernel_dim for s in traj.samples} == {2}


def test_step_and_max_steps(rng):
    h, _ = random_model_pair(rng, 2)
    m = SystemModel(h)
    rho = random_density(2, rng)
    out = step(rho, m, 1e-3)
    assert abs(np.trace(out.op) - 1) < 1e-12
    with pytest.raises(MaxStepsExceeded) as info:
        evolve(rho, m, 100.0, IntegratorConfig(max_steps=3))
    assert info.value.trajectory.status == "max-steps"


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)


def test_find_equilibrium_qubit():
    m = BlochModel(1.0, [0, 0, 1], 1.0).to_system_model()
    fit = find_equilibrium(m, 0.25)
    assert fit.beta == pytest.approx(np.log(3), abs=1e-10)
    assert find_equilibrium(m, 0.5).beta == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(Infeasible):
        find_equilibrium(m, 1.5)


def test_find_equilibrium_with_number():
    h = np.diag([0.0, 1.0, 1.0, 2.0])
    n = np.diag([0.0, 1.0, 1.0, 2.0]) + np.diag([0.0, 0.0, 1.0, 0.0])
    m = SystemModel(h, [n])
    fit = find_equilibrium(m, 0.9, [1.1])
    assert fit.state.expect(h) == pytest.approx(0.9, abs=1e-9)
    assert fit.state.expect(n) == pytest.approx(1.1, abs=1e-9)
    assert np.allclose(fit.state.op, gibbs_state(h, fit.beta, n, fit.nu), atol=1e-12)


def test_perturb_kernel_preserves_means():
    h = np.diag([0.0, 1.0, 2.0])
    rho = np.diag([0.7, 0.3, 0.0])
    m = SystemModel(h)
    p = perturb_kernel(rho, m, 1e-4)
    assert p.kernel_dim == 0
    assert p.expect(h) == pytest.approx(0.3, abs=1e-14)
    assert np.trace(p.op).real == pytest.approx(1.0, abs=1e-14)


def test_stability_probe_leaves_kernel_state():
    h = np.diag([0.0, 1.0, 2.0])
    rho = gibbs_state(np.diag([0.0, 1.0]), 1.0)
    rho = np.pad(rho, ((0, 1), (0, 1)))
    rep = stability_probe(rho, SystemModel(h), 1e-4, t_final=60.0)
    assert rep.final_entropy > rep.initial_entropy
    assert rep.distance_to_reference < 1e-4
    assert rep.departure > 1e-3


def test_trajectory_json_roundtrip(tmp_path, rng):
    h, extra = random_model_pair(rng, 3, with_number=True)
    traj = evolve(random_density(3, rng), SystemModel(h, extra), 1.0, sample_every=0.25)
    path = tmp_path / "t.json"
    traj.to_json(path)
    back = Trajectory.from_json(path)
    for a, b in zip(traj.samples, back.samples):
        assert a.t == b.t
        assert np.max(np.abs(a.state.op - b.state.op)) <= 1e-15 * np.max(np.abs(a.state.op))
        assert a.audit == b.audit


def test_csv_columns(tmp_path, rng):
    h, extra = random_model_pair(rng, 2, with_number=True)
    traj = evolve(random_density(2, rng), SystemModel(h, extra), 0.5, sample_every=0.25)
    traj.to_csv(tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert header == ["t", "lambda_0", "lambda_1", "trace", "energy", "N1", "entropy", "entropy_production", "kernel_dim"]
