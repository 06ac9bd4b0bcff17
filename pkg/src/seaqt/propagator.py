"""Forward and backward time integration of the SEA equation of motion.

The integration variable is ``rho`` itself.  After every accepted step the
matrix is re-Hermitized, spectrally clamped and (optionally) renormalized;
with ``kernel_lock`` the number of zero eigenvalues is held fixed so the
kernel is conserved exactly.  Forward steps that lower the entropy by more
than ``entropy_guard`` are rejected regardless of the local error estimate.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import Infeasible, KernelViolation, MaxStepsExceeded, NotAState, StepRejected
from .operators import (
    StateOperator,
    as_hermitian,
    as_state,
    covariance_matrix,
    dag,
    entropy,
    gibbs_state,
    hermitize,
    max_abs,
    spectral_decompose,
    trace_distance,
)
from .serialization import decode_matrix, encode_matrix, fmt

log = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

METHODS = ("rk4_fixed", "rk45_adaptive")
STATUSES = ("completed", "converged", "boundary-approached", "max-steps")


@dataclass
class IntegratorConfig:
    method: str = "rk45_adaptive"
    dt_init: float = 1e-2
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000
    renormalize_every: int = 1
    kernel_lock: bool = True
    zero_tol: float = 1e-12
    dt_max: float = 0.5
    entropy_guard: float = 1e-9
    boundary_eigenvalue: float = 1e-10
    converged_rate: float = 1e-12
    converged_dissipation: float = 1e-10
    stop_on_converged: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator method {self.method!r}; choose from {METHODS}")
        if not (self.dt_init > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("dt_init and tolerances must be positive")
        if self.max_steps < 1 or self.renormalize_every < 1:
            raise ValueError("max_steps and renormalize_every must be >= 1")


@dataclass(frozen=True)
class Audit:
    trace: float
    energy: float
    extra: tuple
    entropy: float
    entropy_production: float
    eigenvalues: tuple
    kernel_dim: int


@dataclass(frozen=True, eq=False)
class Sample:
    t: float
    state: StateOperator
    audit: Audit


@dataclass(eq=False)
class Trajectory:
    samples: list = field(default_factory=list)
    status: str = "completed"
    extra_names: tuple = ()
    n_steps: int = 0
    n_rejected: int = 0
    entropy_increments: list = field(default_factory=list, repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def states(self) -> list:
        return [s.state for s in self.samples]

    @property
    def final(self) -> StateOperator:
        return self.samples[-1].state

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s.audit, name) for s in self.samples])

    def summary(self) -> dict:
        """Audit block: conservation drift, entropy increments, final status."""
        a0 = self.samples[0].audit
        tr = self.column("trace")
        en = self.column("energy")
        inc = np.asarray(self.entropy_increments)
        out = {
            "status": self.status,
            "t_start": self.samples[0].t,
            "t_end": self.samples[-1].t,
            "n_samples": len(self.samples),
            "n_steps": self.n_steps,
            "n_rejected": self.n_rejected,
            "max_trace_drift": float(np.max(np.abs(tr - 1.0))),
            "max_energy_drift": float(np.max(np.abs(en - a0.energy))),
            "min_entropy_increment": float(inc.min()) if inc.size else 0.0,
            "max_entropy_increment": float(inc.max()) if inc.size else 0.0,
            "entropy_initial": a0.entropy,
            "entropy_final": self.samples[-1].audit.entropy,
            "kernel_dims": sorted({s.audit.kernel_dim for s in self.samples}),
        }
        for i, name in enumerate(self.extra_names):
            vals = np.array([s.audit.extra[i] for s in self.samples])
            out[f"max_{name}_drift"] = float(np.max(np.abs(vals - a0.extra[i])))
        return out

    def csv_header(self) -> list:
        d = len(self.samples[0].audit.eigenvalues)
        return (
            ["t"]
            + [f"lambda_{i}" for i in range(d)]
            + ["trace", "energy"]
            + list(self.extra_names)
            + ["entropy", "entropy_production", "kernel_dim"]
        )

    def csv_rows(self) -> list:
        rows = []
        for s in self.samples:
            a = s.audit
            rows.append(
                [fmt(s.t)]
                + [fmt(x) for x in a.eigenvalues]
                + [fmt(a.trace), fmt(a.energy)]
                + [fmt(x) for x in a.extra]
                + [fmt(a.entropy), fmt(a.entropy_production), str(a.kernel_dim)]
            )
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_header())
            w.writerows(self.csv_rows())

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "extra_names": list(self.extra_names),
            "n_steps": self.n_steps,
            "n_rejected": self.n_rejected,
            "samples": [
                {
                    "t": s.t,
                    "rho": encode_matrix(s.state.op),
                    "audit": {
                        "trace": s.audit.trace,
                        "energy": s.audit.energy,
                        "extra": list(s.audit.extra),
                        "entropy": s.audit.entropy,
                        "entropy_production": s.audit.entropy_production,
                        "eigenvalues": list(s.audit.eigenvalues),
                        "kernel_dim": s.audit.kernel_dim,
                    },
                }
                for s in self.samples
            ],
            "summary": self.summary(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        samples = []
        for s in data["samples"]:
            op = decode_matrix(s["rho"])
            a = s["audit"]
            n_kernel = int(a["kernel_dim"])
            state = spectral_decompose(op, n_kernel=n_kernel, renormalize=False)
            # keep the stored matrix verbatim rather than its reconstruction
            state = StateOperator(op, state.eigenvalues, state.eigenvectors, state.kernel_mask)
            audit = Audit(
                a["trace"], a["energy"], tuple(a["extra"]), a["entropy"],
                a["entropy_production"], tuple(a["eigenvalues"]), n_kernel,
            )
            samples.append(Sample(float(s["t"]), state, audit))
        return cls(samples, data["status"], tuple(data["extra_names"]), data["n_steps"], data["n_rejected"])

    @classmethod
    def from_json(cls, path) -> "Trajectory":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _audit(state: StateOperator, model, rate: float) -> Audit:
    h = model.hamiltonian
    extras = model.conserved_observables[1:]
    return Audit(
        float(np.real(np.trace(state.op))),
        state.expect(h),
        tuple(state.expect(n) for n in extras),
        entropy(state),
        float(rate),
        tuple(float(x) for x in state.eigenvalues),
        state.kernel_dim,
    )


def _project(m: np.ndarray, n_kernel: int | None, cfg: IntegratorConfig, renormalize: bool = True) -> StateOperator:
    """Hermitize and clamp an integrator output back onto the state space."""
    try:
        return spectral_decompose(hermitize(m), cfg.zero_tol, n_kernel if cfg.kernel_lock else None, renormalize)
    except NotAState as exc:
        raise StepRejected(str(exc)) from exc


def _rk4(state: StateOperator, model, dt: float, n_kernel, cfg, k1=None) -> np.ndarray:
    y = state.op
    k1 = model.rhs(state) if k1 is None else k1
    k2 = model.rhs(_project(y + 0.5 * dt * k1, n_kernel, cfg))
    k3 = model.rhs(_project(y + 0.5 * dt * k2, n_kernel, cfg))
    k4 = model.rhs(_project(y + dt * k3, n_kernel, cfg))
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _dopri(state: StateOperator, model, dt: float, n_kernel, cfg, k1, renormalize: bool = True):
    y = state.op
    ks = [k1]
    for i in range(1, 6):
        yi = y + dt * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(model.rhs(_project(yi, n_kernel, cfg)))
    y5 = y + dt * sum(b * k for b, k in zip(_B5, ks))
    new = _project(y5, n_kernel, cfg, renormalize)
    ev7 = model.evaluate(new)
    ks.append(ev7.total)
    err = dt * sum(e * k for e, k in zip(_E, ks))
    scale = cfg.abs_tol + cfg.rel_tol * max(max_abs(y), max_abs(y5))
    return new, ev7, max_abs(err) / scale


def step(rho, model, dt: float, config: IntegratorConfig | None = None) -> StateOperator:
    """Advance ``rho`` by one step of signed size ``dt``.

    With ``rk45_adaptive`` a step whose error estimate exceeds the tolerance
    raises :class:`StepRejected`.
    """
    cfg = config or IntegratorConfig(method="rk4_fixed")
    if dt == 0:
        raise ValueError("dt must be nonzero")
    state = as_state(rho, cfg.zero_tol)
    nk = state.kernel_dim
    if cfg.method == "rk4_fixed":
        return _project(_rk4(state, model, dt, nk, cfg), nk, cfg)
    new, _, err = _dopri(state, model, dt, nk, cfg, model.rhs(state))
    if err > 1.0:
        raise StepRejected(f"error estimate {err:.3g} exceeds tolerance")
    return new


def _unitary(model, dt: float) -> np.ndarray:
    w, u = np.linalg.eigh(model.hamiltonian)
    return (u * np.exp(-1j * w * dt)) @ dag(u)


def evolve(
    rho0,
    model,
    t_final: float,
    config: IntegratorConfig | None = None,
    sample_every: float | None = None,
    sample_times: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_final`` (negative for backward runs).

    Samples are recorded at ``sample_times`` (or every ``sample_every``), or
    after every accepted step when neither is given; ``t_final`` is always
    sampled unless the run stops early at the zero-entropy boundary.
    """
    cfg = config or IntegratorConfig()
    if t_final == 0:
        raise ValueError("t_final must be nonzero")
    direction = 1.0 if t_final > 0 else -1.0
    state = as_state(rho0, cfg.zero_tol)
    n_kernel = state.kernel_dim

    if sample_times is not None:
        targets = sorted({float(t) for t in sample_times if 0 < direction * t <= direction * t_final} | {t_final},
                         key=lambda t: direction * t)
    elif sample_every:
        n = int(np.floor(abs(t_final) / abs(sample_every) + 1e-9))
        targets = [direction * abs(sample_every) * k for k in range(1, n + 1)]
        if not targets or abs(targets[-1] - t_final) > 1e-12 * max(1.0, abs(t_final)):
            targets.append(t_final)
        else:
            targets[-1] = t_final
    else:
        targets = None

    extra_names = tuple(f"N{i}" for i in range(1, len(model.conserved_observables)))
    traj = Trajectory(extra_names=extra_names)
    ev = model.evaluate(state)
    traj.samples.append(Sample(0.0, state, _audit(state, model, ev.entropy_production)))
    t = 0.0
    dt = direction * min(cfg.dt_init, abs(t_final))
    target_idx = 0
    steps = 0

    def next_stop():
        return targets[target_idx] if targets is not None else t_final

    while True:
        if (
            cfg.stop_on_converged
            and ev.entropy_production < cfg.converged_rate
            and max_abs(ev.dissipative_term) < cfg.converged_dissipation
        ):
            # nondissipative: the remaining motion is exactly unitary
            stops = targets[target_idx:] if targets is not None else [t_final]
            for ts in stops:
                u = _unitary(model, ts - t)
                moved = spectral_decompose(hermitize(u @ state.op @ dag(u)), cfg.zero_tol, n_kernel if cfg.kernel_lock else None)
                traj.samples.append(Sample(ts, moved, _audit(moved, model, ev.entropy_production)))
                traj.entropy_increments.append(0.0)
            traj.status = "converged"
            break

        if n_kernel < state.dim and direction < 0:
            smallest = state.eigenvalues[~state.kernel_mask].min()
            if smallest < cfg.boundary_eigenvalue:
                traj.status = "boundary-approached"
                if traj.samples[-1].t != t:
                    traj.samples.append(Sample(t, state, _audit(state, model, ev.entropy_production)))
                break

        if steps >= cfg.max_steps:
            traj.status = "max-steps"
            traj.samples.append(Sample(t, state, _audit(state, model, ev.entropy_production)))
            exc = MaxStepsExceeded(f"max_steps={cfg.max_steps} reached at t={t:.6g}")
            exc.trajectory = traj
            raise exc

        stop = next_stop()
        h = dt
        if direction * (t + h - stop) > 0:
            h = stop - t
        hits_stop = abs(t + h - stop) <= 1e-14 * max(1.0, abs(stop))

        renorm = (traj.n_steps + 1) % cfg.renormalize_every == 0
        try:
            if cfg.method == "rk4_fixed":
                new = _project(_rk4(state, model, h, n_kernel, cfg, ev.total), n_kernel, cfg, renorm)
                new_ev = model.evaluate(new)
                err = 0.0
            else:
                new, new_ev, err = _dopri(state, model, h, n_kernel, cfg, ev.total, renorm)
        except StepRejected as exc:
            if cfg.method == "rk4_fixed":
                raise
            log.debug("step rejected at t=%g (h=%g): %s", t, h, exc)
            traj.n_rejected += 1
            steps += 1
            dt = 0.5 * h
            if abs(dt) < 1e-15 * max(1.0, abs(t)):
                if direction < 0:
                    traj.status = "boundary-approached"
                    break
                raise
            continue

        steps += 1
        ds = entropy(new) - entropy(state)
        guard_bad = direction * ds < -cfg.entropy_guard
        if cfg.method == "rk45_adaptive" and (err > 1.0 or guard_bad):
            traj.n_rejected += 1
            fac = 0.5 if guard_bad and err <= 1.0 else max(0.2, 0.9 * err ** -0.2)
            dt = h * fac
            continue

        if not cfg.kernel_lock and new.kernel_dim != n_kernel:
            raise KernelViolation(f"kernel dimension changed from {n_kernel} to {new.kernel_dim} at t={t + h:.6g}")

        t = stop if hits_stop else t + h
        state, ev = new, new_ev
        traj.n_steps += 1
        traj.entropy_increments.append(direction * ds)
        if targets is None or hits_stop:
            traj.samples.append(Sample(t, state, _audit(state, model, ev.entropy_production)))
            if hits_stop and targets is not None:
                target_idx += 1
        if hits_stop and t == t_final:
            break
        if cfg.method == "rk45_adaptive":
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not hits_stop or abs(h) >= abs(dt):
                dt = h * fac
            dt = direction * min(abs(dt), cfg.dt_max)
    return traj


@dataclass(frozen=True)
class RoundtripReport:
    roundtrip_error: float
    composition_error: float
    forward_status: str
    backward_status: str


def roundtrip_error(rho0, model, t_total: float, config: IntegratorConfig | None = None) -> RoundtripReport:
    """Max-abs error of forward-``T``-then-backward-``T`` and of ``L_{T/2} L_{T/2}`` vs ``L_T``."""
    cfg = config or IntegratorConfig()
    state = as_state(rho0, cfg.zero_tol)
    if t_total == 0:
        return RoundtripReport(0.0, 0.0, "completed", "completed")
    if t_total < 0:
        raise ValueError("T must be positive")
    fwd = evolve(state, model, t_total, cfg)
    back = evolve(fwd.final, model, -t_total, cfg)
    half = evolve(state, model, t_total / 2, cfg)
    half2 = evolve(half.final, model, t_total / 2, cfg)
    return RoundtripReport(
        max_abs(back.final.op - state.op),
        max_abs(half2.final.op - fwd.final.op),
        fwd.status,
        back.status,
    )


@dataclass(frozen=True, eq=False)
class EquilibriumFit:
    state: StateOperator
    beta: float
    nu: float | None = None


BETA_BRACKET = 700.0


def find_equilibrium(model, energy_mean: float, extra_means: Sequence[float] | None = None) -> EquilibriumFit:
    """Canonical (grand-canonical) state with the requested mean values.

    With only ``H`` the energy condition is solved by bracketed root finding on
    ``beta in [-700, 700]`` (``<H>`` decreases monotonically in ``beta``).  With
    a number-like observable the convex dual ``ln Z + beta E - nu N`` is
    minimized by a trust-region Newton method; targets outside the interior of
    the joint spectrum's convex hull are reported as infeasible.
    """
    h = as_hermitian(model.hamiltonian)
    extras = model.conserved_observables[1:]
    extra_means = list(extra_means or [])
    if len(extra_means) > len(extras):
        raise ValueError("more target means than extra conserved observables")
    if len(extra_means) > 1:
        raise NotImplementedError("at most one extra conserved observable is supported")
    n_op = extras[0] if extra_means else None
    w = np.linalg.eigvalsh(h)
    emin, emax = float(w[0]), float(w[-1])
    spread = max(1.0, abs(emin), abs(emax))
    if emax - emin <= 1e-12 * spread:
        if abs(energy_mean - emin) > 1e-9 * spread:
            raise Infeasible(f"energy {energy_mean!r} but H is degenerate at {emin!r}")
        if n_op is None:
            return EquilibriumFit(as_state(np.eye(h.shape[0]) / h.shape[0]), 0.0)
    elif not emin < energy_mean < emax:
        raise Infeasible(f"energy {energy_mean!r} outside the open range ({emin!r}, {emax!r})")

    def energy_at(beta, nu=0.0):
        rho = gibbs_state(h, beta, n_op, nu)
        return float(np.real(np.trace(rho @ h)))

    def solve_beta(nu=0.0):
        f = lambda b: energy_at(b, nu) - energy_mean  # noqa: E731
        lo, hi = f(-BETA_BRACKET), f(BETA_BRACKET)
        if lo == 0:
            return -BETA_BRACKET
        if hi == 0:
            return BETA_BRACKET
        if lo * hi > 0:
            raise Infeasible(f"energy {energy_mean!r} not attainable at nu={nu!r}")
        return brentq(f, -BETA_BRACKET, BETA_BRACKET, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    if n_op is None:
        beta = solve_beta()
        return EquilibriumFit(as_state(gibbs_state(h, beta)), float(beta))

    n_target = float(extra_means[0])
    spread_n = max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(n_op)))))

    # convex dual: ln Z(beta, nu) + beta <H> - nu <N>, minimized where the means match
    def dual(x):
        w = np.linalg.eigvalsh(hermitize(-x[0] * h + x[1] * n_op))
        top = w.max()
        return top + np.log(np.sum(np.exp(w - top))) + x[0] * energy_mean - x[1] * n_target

    def grad(x):
        rho = gibbs_state(h, x[0], n_op, x[1])
        return np.array([energy_mean - np.trace(rho @ h).real, np.trace(rho @ n_op).real - n_target])

    def hess(x):
        c = covariance_matrix([h, n_op], as_state(gibbs_state(h, x[0], n_op, x[1])))
        return np.array([[c[0, 0], -c[0, 1]], [-c[0, 1], c[1, 1]]])

    res = minimize(dual, np.zeros(2), jac=grad, hess=hess, method="trust-exact", options={"gtol": 1e-14, "maxiter": 1000})
    beta, nu = (float(v) for v in res.x)
    gap = np.abs(grad(res.x)) / np.array([spread, spread_n])
    if np.max(gap) > 1e-9 or max(abs(beta), abs(nu)) > BETA_BRACKET:
        raise Infeasible(f"means ({energy_mean!r}, {n_target!r}) not attainable by a canonical state")
    return EquilibriumFit(as_state(gibbs_state(h, beta, n_op, nu)), beta, nu)


@dataclass(frozen=True, eq=False)
class StabilityReport:
    perturbed: StateOperator
    final: StateOperator
    reference: StateOperator | None
    initial_entropy: float
    final_entropy: float
    departure: float
    distance_to_reference: float | None
    trajectory: Trajectory = field(repr=False)


def perturb_kernel(rho, model, eps: float) -> StateOperator:
    """Populate one kernel direction of ``rho`` with weight ``eps``.

    The support eigenvalues are shifted (minimum-norm) so that the trace and
    every conserved mean are unchanged.
    """
    state = as_state(rho)
    if eps == 0:
        return state
    if state.kernel_dim == 0:
        raise ValueError("state has no kernel to perturb")
    k = state.eigenvectors[:, state.kernel_mask][:, 0]
    pk = np.outer(k, k.conj())
    sup = state.support_vectors
    obs = model.conserved_observables
    rows = [np.ones(sup.shape[1])] + [np.real(np.einsum("ij,ik,kj->j", sup.conj(), o, sup)) for o in obs]
    rhs = [-eps] + [-eps * float(np.real(k.conj() @ o @ k)) for o in obs]
    a = np.array(rows)
    b = np.array(rhs)
    c, *_ = np.linalg.lstsq(a, b, rcond=None)
    if max_abs(a @ c - b) > 1e-12:
        raise Infeasible("support compensation cannot preserve the conserved means")
    new = state.op + eps * pk + (sup * c) @ dag(sup)
    try:
        return spectral_decompose(hermitize(new))
    except NotAState as exc:
        raise Infeasible(f"compensated state is not positive: {exc}") from exc


def stability_probe(rho_ndiss, model, eps: float, t_final: float = 60.0, config: IntegratorConfig | None = None) -> StabilityReport:
    """Perturb a kernel eigenvalue of a nondissipative state by ``eps`` and evolve.

    The reference is the full-range canonical state with the same means.
    """
    if not 0 <= eps <= 1e-3:
        raise ValueError("eps must lie in [0, 1e-3]")
    state = as_state(rho_ndiss)
    start = perturb_kernel(state, model, eps)
    traj = evolve(start, model, t_final, config)
    final = traj.final
    ref = None
    dist = None
    try:
        means = [start.expect(o) for o in model.conserved_observables]
        ref = find_equilibrium(model, means[0], means[1:] or None).state
        dist = trace_distance(final.op, ref.op)
    except (Infeasible, NotImplementedError):
        pass
    return StabilityReport(
        start, final, ref, entropy(start), entropy(final), trace_distance(final.op, state.op), dist, traj
    )
