"""Invariant audit on built-in fixtures.

Every check returns a :class:`CheckResult`; :func:`run_audit` collects them.
``dissipation_sign`` flips the dissipative term of the single-constituent
fixtures so the suite can be shown to catch a broken generator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .composite import CompositeModel, composite_generator, locality_check, partial_trace, reduced_generator
from .generator import (
    SystemModel,
    degenerate_closed_form,
    dissipative_term_determinant,
    entropy_production_rate,
    nondegenerate_closed_form,
)
from .errors import MaxStepsExceeded
from .operators import random_density, random_hermitian, random_unitary
from .propagator import IntegratorConfig, evolve, roundtrip_error

AUDIT_MAX_STEPS = 5000

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<26s} value={self.value:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def _fixture(dim: int, seed: int, sign: float = 1.0, with_number: bool = True):
    rng = np.random.default_rng(seed)
    u = random_unitary(dim, rng)
    energies = np.sort(rng.uniform(0.0, 2.0, dim))
    h = (u * energies) @ u.conj().T
    extra = []
    if with_number:
        numbers = rng.integers(0, 3, dim).astype(float)
        extra = [(u * numbers) @ u.conj().T]
    model = SystemModel(h, extra, dissipation_sign=sign)
    return model, random_density(dim, rng), rng


def _run(rho, model, t_final, **kw):
    cfg = IntegratorConfig(entropy_guard=np.inf, max_steps=AUDIT_MAX_STEPS)
    try:
        return evolve(rho, model, t_final, cfg, **kw)
    except MaxStepsExceeded as exc:
        return exc.trajectory


def check_conservation(sign: float = 1.0, seed: int = 11) -> CheckResult:
    model, rho, _ = _fixture(3, seed, sign)
    traj = _run(rho, model, 5.0, sample_every=0.5)
    s = traj.summary()
    e0 = abs(traj.samples[0].audit.energy)
    worst = max(s["max_trace_drift"], s["max_energy_drift"] / (1 + e0), s["max_N1_drift"])
    ok = worst < 1e-7 and traj.status != "max-steps"
    return CheckResult("conservation", ok, worst, 1e-7, f"trace/energy/N over {traj.n_steps} steps ({traj.status})")


def check_monotonicity(sign: float = 1.0, seed: int = 12) -> CheckResult:
    # guard disabled: the check must see the generator's own behaviour
    model, rho, _ = _fixture(3, seed, sign)
    traj = _run(rho, model, 5.0)
    worst = min(traj.entropy_increments) if traj.entropy_increments else 0.0
    return CheckResult("entropy monotonicity", worst >= -1e-9, worst, -1e-9, "min entropy increment per step")


def check_roundtrip(sign: float = 1.0, seed: int = 13) -> CheckResult:
    model, rho, _ = _fixture(3, seed, sign)
    rep = roundtrip_error(rho, model, 1.0, IntegratorConfig(max_steps=AUDIT_MAX_STEPS))
    worst = max(rep.roundtrip_error, rep.composition_error)
    return CheckResult("group roundtrip", worst < 1e-6, worst, 1e-6, f"T=1 ({rep.forward_status}/{rep.backward_status})")


def check_formulations(sign: float = 1.0, seed: int = 14, cases: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(cases):
        dim = 2 + k % 3
        h = random_hermitian(dim, rng)
        rho = random_density(dim, rng)
        model = SystemModel(h, dissipation_sign=sign)
        d_proj = model.evaluate(rho).dissipative_term
        d_det = dissipative_term_determinant(rho, model.constraints).dissipative_term
        d_cf = nondegenerate_closed_form(rho, h)
        worst = max(worst, np.max(np.abs(d_proj - d_det)), np.max(np.abs(d_proj - d_cf)))
        flat = SystemModel(np.eye(dim), dissipation_sign=sign)
        worst = max(worst, np.max(np.abs(flat.evaluate(rho).dissipative_term - degenerate_closed_form(rho))))
    return CheckResult("formulation equivalence", worst < 1e-8, float(worst), 1e-8, f"{cases} random cases")


def check_entropy_rate(sign: float = 1.0, seed: int = 15, cases: int = 20) -> CheckResult:
    """Tr(D ln rho) against the Gram-ratio rate; a reversed generator breaks the match."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(cases):
        dim = 2 + k % 3
        model = SystemModel(random_hermitian(dim, rng), dissipation_sign=sign)
        rho = random_density(dim, rng)
        w, u = np.linalg.eigh(rho)
        lnr = (u * np.log(w)) @ u.conj().T
        from_d = -float(np.real(np.trace(model.evaluate(rho).dissipative_term @ lnr)))
        worst = max(worst, abs(from_d - entropy_production_rate(rho, model.constraints)))
    return CheckResult("entropy-rate identity", worst < 1e-10, float(worst), 1e-10, f"{cases} random cases")


def check_locality(seed: int = 16) -> CheckResult:
    """Locality guarantees of the composite equation for V = 0.

    At any fixed state the rate of change of rho_A is independent of H_B and
    equals the reduced equation; product states stay local along trajectories.
    """
    rng = np.random.default_rng(seed)
    ha, hb1, hb2 = (random_hermitian(2, rng) for _ in range(3))
    rho = random_density(4, rng)
    m1 = CompositeModel([2, 2], [ha, hb1])
    m2 = CompositeModel([2, 2], [ha, hb2])
    g1 = partial_trace(composite_generator(rho, m1).total, [2, 2], [0])
    g2 = partial_trace(composite_generator(rho, m2).total, [2, 2], [0])
    inst = float(np.max(np.abs(g1 - g2)))
    red = float(np.max(np.abs(g1 - reduced_generator(rho, m1, [0]))))
    prod = np.kron(random_density(2, rng), random_density(2, rng))
    traj = locality_check(m1, prod, [hb1, hb2], 5.0, sample_every=0.5).max_distance
    worst = max(inst, red, traj)
    return CheckResult("locality", worst < 1e-7, worst, 1e-7, f"instant={inst:.1e} reduced={red:.1e} product-run={traj:.1e}")


CHECKS = ("conservation", "monotonicity", "roundtrip", "formulations", "entropy_rate", "locality")


def run_audit(dissipation_sign: float = 1.0, checks=CHECKS) -> list[CheckResult]:
    table = {
        "conservation": lambda: check_conservation(dissipation_sign),
        "monotonicity": lambda: check_monotonicity(dissipation_sign),
        "roundtrip": lambda: check_roundtrip(dissipation_sign),
        "formulations": lambda: check_formulations(dissipation_sign),
        "entropy_rate": lambda: check_entropy_rate(dissipation_sign),
        "locality": check_locality,
    }
    out = []
    for name in checks:
        try:
            res = table[name]()
        except Exception as exc:  # a crash counts as a failed invariant
            log.debug("audit check %s raised", name, exc_info=True)
            res = CheckResult(name, False, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}")
        log.info(res.line())
        out.append(res)
    return out
