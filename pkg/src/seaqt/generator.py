"""Steepest-entropy-ascent generator for a single constituent.

The equation of motion is

    drho/dt = -i [H, rho] + {dM, rho} / (2 tau)

where ``sqrt(rho) dM`` is the component of ``-sqrt(rho) ln rho`` orthogonal
to the span of ``sqrt(rho) I`` and ``sqrt(rho) R_i`` for the conserved
observables ``R_i`` (``H`` first, then any number-like operators).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import DimensionMismatch
from .operators import (
    PIVOT_TOL,
    StateOperator,
    _log_support,
    as_hermitian,
    as_operator,
    as_state,
    covariance_matrix,
    dag,
    gram_determinant,
    hermitize,
    log_on_range,
    ordered_cholesky,
)

NONDISS_TOL = 1e-9


@dataclass(frozen=True)
class RelaxationSpec:
    """Relaxation time: a positive constant, or a callable ``tau(rho)``."""

    tau: float = 1.0
    func: Callable[[StateOperator], float] | None = None

    def __post_init__(self):
        if self.func is None and not self.tau > 0:
            raise ValueError(f"relaxation time must be positive, got {self.tau!r}")

    @property
    def kind(self) -> str:
        return "constant" if self.func is None else "functional"

    def __call__(self, rho: StateOperator) -> float:
        if self.func is None:
            return self.tau
        t = float(self.func(rho))
        if not t > 0:
            raise ValueError(f"relaxation functional returned non-positive tau {t!r}")
        return t


def _as_relaxation(tau) -> RelaxationSpec:
    if isinstance(tau, RelaxationSpec):
        return tau
    if callable(tau):
        return RelaxationSpec(func=tau)
    return RelaxationSpec(float(tau))


@dataclass(frozen=True, eq=False)
class ConservedSet:
    """Ordered conserved observables; the identity is always implied."""

    observables: tuple
    names: tuple = ()

    def __init__(self, observables: Sequence, names: Sequence[str] = (), hamiltonian=None, strict_tol: float = 1e-10):
        obs = tuple(as_hermitian(o) for o in observables)
        if obs:
            d = obs[0].shape[0]
            for o in obs:
                if o.shape[0] != d:
                    raise DimensionMismatch("conserved observables differ in dimension")
        if hamiltonian is not None:
            h = as_hermitian(hamiltonian)
            for i, o in enumerate(obs):
                comm = h @ o - o @ h
                if np.max(np.abs(comm), initial=0.0) > strict_tol:
                    raise ValueError(f"conserved observable {i} does not commute with H")
        names = tuple(names) or tuple(["H"] + [f"N{i}" for i in range(1, len(obs))])[: len(obs)]
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return len(self.observables)

    def __iter__(self):
        return iter(self.observables)


def _as_constraints(constraints) -> ConservedSet:
    if isinstance(constraints, ConservedSet):
        return constraints
    if isinstance(constraints, np.ndarray) and constraints.ndim == 2:
        return ConservedSet([constraints])
    return ConservedSet(list(constraints))


@dataclass(frozen=True, eq=False)
class GeneratorEvaluation:
    hamiltonian_term: np.ndarray
    dissipative_term: np.ndarray
    multipliers: np.ndarray
    entropy_production: float
    dropped_constraints: tuple = ()
    residual_norm: float = 0.0
    parts: tuple = field(default=(), repr=False)

    @property
    def total(self) -> np.ndarray:
        return self.hamiltonian_term + self.dissipative_term


def hamiltonian_term(rho, h) -> np.ndarray:
    """``-i [H, rho]``."""
    r = as_operator(rho)
    h = as_operator(h, r.shape[0])
    return -1j * (h @ r - r @ h)


def _dissipation(rho: StateOperator, target: np.ndarray, ops: Sequence[np.ndarray], tau: float):
    """Project ``target`` in the eigenbasis of ``rho`` and map back."""
    t_eig = rho.to_eigenbasis(target)
    if ops:
        ops_eig = np.stack([rho.to_eigenbasis(o) for o in ops])
    else:
        ops_eig = np.zeros((0, rho.dim, rho.dim), dtype=complex)
    return _backend.project_dissipator(rho.eigenvalues, t_eig, ops_eig, tau, PIVOT_TOL)


def dissipative_term_projection(rho, constraints, tau=1.0) -> GeneratorEvaluation:
    """Dissipative term from the orthogonal-projection (normal equations) form.

    ``multipliers`` holds the coefficient on the identity first, then one per
    constraint (0 for dropped ones); entropy enters as ``S = -ln rho``.
    """
    rho = as_state(rho)
    cons = _as_constraints(constraints)
    t = _as_relaxation(tau)(rho)
    d = rho.dim
    u = rho.eigenvectors
    s_eig = np.diag(-_log_support(rho)).astype(complex)
    if len(cons):
        ops_eig = np.stack([dag(u) @ as_operator(o, d) @ u for o in cons])
    else:
        ops_eig = np.zeros((0, d, d), dtype=complex)
    a_eig, d_eig, mult, kept, rate = _backend.project_dissipator(rho.eigenvalues, s_eig, ops_eig, t, PIVOT_TOL)
    diss = hermitize(u @ d_eig @ dag(u))
    dropped = tuple(int(i) for i in np.flatnonzero(np.asarray(kept) == 0))
    resid = float(np.sqrt(max(rate * t, 0.0)))
    return GeneratorEvaluation(np.zeros((d, d), complex), diss, np.asarray(mult), float(rate), dropped, resid)


def _kept_indices(rho: StateOperator, ops) -> list[int]:
    if not len(ops):
        return []
    _, kept = ordered_cholesky(covariance_matrix(list(ops), rho), PIVOT_TOL)
    return kept


def massieu_operator(rho, constraints) -> np.ndarray:
    """Massieu-function operator from the bordered-determinant ratio.

    The first row of the bordered matrix holds the operators ``S, R_1, ...``;
    the numerator is expanded along it by cofactors.  Dependent constraints
    are dropped first, using the same rule as the projection form.
    """
    rho = as_state(rho)
    cons = _as_constraints(constraints)
    s_op = -log_on_range(rho)
    ops = [cons.observables[i] for i in _kept_indices(rho, cons.observables)]
    allops = [s_op] + ops
    cov = covariance_matrix(allops, rho)
    n = len(ops)
    # rows 1..n of the bordered matrix: [cov(S,R_i), cov(R_1,R_i), ...]
    lower = cov[1:, :]
    gamma = np.linalg.det(cov[1:, 1:]) if n else 1.0
    m = np.zeros((rho.dim, rho.dim), dtype=complex)
    for c, op in enumerate(allops):
        minor = np.delete(lower, c, axis=1)
        cof = (-1) ** c * (np.linalg.det(minor) if n else 1.0)
        m = m + cof * op
    return hermitize(m / gamma)


def dissipative_term_determinant(rho, constraints, tau=1.0) -> GeneratorEvaluation:
    """Dissipative term ``{dM, rho} / (2 tau)`` with ``M`` from determinants."""
    rho = as_state(rho)
    cons = _as_constraints(constraints)
    t = _as_relaxation(tau)(rho)
    m = massieu_operator(rho, cons)
    dm = m - rho.expect(m) * np.eye(rho.dim)
    diss = hermitize(dm @ rho.op + rho.op @ dm) / (2.0 * t)
    kept = _kept_indices(rho, cons.observables)
    dropped = tuple(i for i in range(len(cons)) if i not in kept)
    rate = entropy_production_rate(rho, cons, t)
    return GeneratorEvaluation(np.zeros_like(diss), diss, np.array([]), rate, dropped, float(np.sqrt(rate * t)))


def entropy_production_rate(rho, constraints, tau=1.0) -> float:
    """Gram-determinant ratio ``Gamma(sqrt(rho) ln rho, {..}) / (tau Gamma({..}))``."""
    rho = as_state(rho)
    cons = _as_constraints(constraints)
    t = _as_relaxation(tau)(rho)
    ops = [cons.observables[i] for i in _kept_indices(rho, cons.observables)]
    num = gram_determinant(ops + [log_on_range(rho)], rho, tol=0.0)
    den = gram_determinant(ops, rho) if ops else 1.0
    return max(num / den, 0.0) / t


def degenerate_closed_form(rho, tau=1.0) -> np.ndarray:
    """Dissipative term for ``H = e I``: ``-(rho ln rho - rho Tr(rho ln rho)) / tau``."""
    rho = as_state(rho)
    rl = rho.function(rho.eigenvalues * _log_support(rho))
    return -(rl - rho.op * np.real(np.trace(rl))) / tau


def nondegenerate_closed_form(rho, h, tau=1.0) -> np.ndarray:
    """Explicit 3x3 determinant form for constraints ``{I, H}`` with Var(H) > 0."""
    rho = as_state(rho)
    h = as_hermitian(h, rho.dim)
    r = rho.op
    lr = log_on_range(rho)
    rl = rho.function(rho.eigenvalues * _log_support(rho))
    tr = lambda x: float(np.real(np.trace(x)))  # noqa: E731
    e = tr(r @ h)
    e2 = tr(r @ h @ h)
    trl = tr(rl)
    thl = tr(r @ h @ lr)
    anti = 0.5 * (h @ r + r @ h)
    # cofactor expansion along the operator row
    num = rl * (1.0 * e2 - e * e) - r * (trl * e2 - e * thl) + anti * (trl * e - 1.0 * thl)
    return -hermitize(num) / ((e2 - e * e) * tau)


@dataclass(frozen=True, eq=False)
class NondissipativeFit:
    is_nondissipative: bool
    residual: float
    beta: float | None = None
    nu: float | None = None
    support_projector: np.ndarray | None = field(default=None, repr=False)
    kind: str | None = None


def is_nondissipative(rho, constraints, tol: float = NONDISS_TOL, hamiltonian=None) -> NondissipativeFit:
    """Test whether ``rho = B exp(-beta H + nu N) B / Z`` for a projector ``B``.

    ``hamiltonian`` (default: first constraint) decides between equilibrium
    (``[B, H] = 0``) and limit cycle.
    """
    rho = as_state(rho)
    cons = _as_constraints(constraints)
    ev = dissipative_term_projection(rho, cons, 1.0)
    if ev.residual_norm >= tol:
        return NondissipativeFit(False, ev.residual_norm)
    mult = ev.multipliers
    kept = [i for i in range(len(cons)) if i not in ev.dropped_constraints]
    # A = S - l0 - sum l_i R_i vanishes on the support, S = -ln rho:
    # ln rho = -l0 - l_H H - l_N N  =>  beta = l_H, nu = -l_N
    beta = float(mult[1]) if len(cons) and 0 in kept else None
    nu = float(-mult[2]) if len(cons) > 1 and 1 in kept else None
    b = rho.support_projector
    h = cons.observables[0] if hamiltonian is None and len(cons) else hamiltonian
    kind = "equilibrium"
    if h is not None:
        h = as_operator(h, rho.dim)
        if np.max(np.abs(b @ h - h @ b), initial=0.0) > 1e-9:
            kind = "limit-cycle"
    return NondissipativeFit(True, ev.residual_norm, beta, nu, b, kind)


@dataclass(eq=False)
class SystemModel:
    """Single-constituent model: Hamiltonian, extra conserved observables, tau."""

    hamiltonian: np.ndarray
    extra_conserved: list = field(default_factory=list)
    relaxation: RelaxationSpec = field(default_factory=RelaxationSpec)
    dissipation_sign: float = 1.0

    def __post_init__(self):
        self.hamiltonian = as_hermitian(self.hamiltonian)
        self.extra_conserved = [as_hermitian(n, self.dim) for n in self.extra_conserved]
        self.relaxation = _as_relaxation(self.relaxation)
        self.constraints = ConservedSet([self.hamiltonian] + self.extra_conserved, hamiltonian=self.hamiltonian)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def conserved_observables(self) -> list:
        return list(self.constraints.observables)

    def evaluate(self, rho) -> GeneratorEvaluation:
        rho = as_state(rho)
        ev = dissipative_term_projection(rho, self.constraints, self.relaxation)
        u = rho.eigenvectors
        ham = u @ _backend.hamiltonian_eig(rho.eigenvalues, dag(u) @ self.hamiltonian @ u) @ dag(u)
        diss = ev.dissipative_term
        if self.dissipation_sign != 1.0:
            diss = self.dissipation_sign * diss
        return GeneratorEvaluation(
            ham, diss, ev.multipliers, ev.entropy_production, ev.dropped_constraints, ev.residual_norm
        )

    def rhs(self, rho) -> np.ndarray:
        return self.evaluate(rho).total
