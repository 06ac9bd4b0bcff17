"""Composite systems of distinguishable constituents.

Each subsystem ``J`` contributes a dissipative term built from its "local
perception" of the overall entropy and conserved operators,

    (F)^J = Tr_Jbar[(I_J (x) rho_Jbar) F],

projected in the local metric of ``rho_J`` and assembled as
``{(dM_J)^J, rho_J} (x) rho_Jbar / (2 tau_J)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _backend
from .errors import BadIndexSet, DimensionMismatch
from .generator import GeneratorEvaluation, RelaxationSpec, _as_relaxation
from .operators import (
    PIVOT_TOL,
    StateOperator,
    as_hermitian,
    as_operator,
    as_state,
    dag,
    hermitize,
    log_on_range,
    spectral_decompose,
    trace_distance,
)

MAX_DIM = 64


def _check_keep(keep, n: int) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise BadIndexSet(f"subsystem indices {keep} out of range for {n} subsystems")
    return keep


def partial_trace(op, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (kept order preserved)."""
    a = as_operator(op)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not match operator dimension {a.shape[0]}")
    keep = _check_keep(keep, len(dims))
    t = a.reshape(dims + dims)
    m = len(dims)
    for i in reversed(range(len(dims))):
        if i in keep:
            continue
        t = np.trace(t, axis1=i, axis2=i + m)
        m -= 1
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def reduced_state(rho, dims: Sequence[int], keep: Sequence[int]) -> StateOperator:
    return spectral_decompose(hermitize(partial_trace(rho, dims, keep)))


def embed(a, idx_a: Sequence[int], b, idx_b: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Operator ``a (x) b`` with ``a`` on subsystems ``idx_a`` and ``b`` on ``idx_b``, in natural order."""
    dims = [int(d) for d in dims]
    order = list(idx_a) + list(idx_b)
    if sorted(order) != list(range(len(dims))):
        raise BadIndexSet(f"{idx_a} and {idx_b} do not partition {len(dims)} subsystems")
    full = np.kron(np.asarray(a), np.asarray(b))
    n = len(dims)
    shape = [dims[k] for k in order]
    t = full.reshape(shape + shape)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def local_operator(op, j: int, dims: Sequence[int]) -> np.ndarray:
    """``op`` on subsystem ``j`` tensored with identities elsewhere."""
    rest = [k for k in range(len(dims)) if k != j]
    d_rest = int(np.prod([dims[k] for k in rest])) if rest else 1
    return embed(op, [j], np.eye(d_rest), rest, dims)


@dataclass(eq=False)
class CompositeModel:
    """Subsystem dimensions, local Hamiltonians, interaction ``V`` and relaxation times.

    ``local_numbers`` optionally gives a number-like operator per subsystem
    (``None`` to skip); each becomes a global conserved observable.
    """

    dims: list
    local_hamiltonians: list
    interaction: np.ndarray | None = None
    taus: list | None = None
    tau: float = 1.0
    local_numbers: list | None = None
    max_dim: int = MAX_DIM
    hamiltonian: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError("dims must be a non-empty list of positive integers")
        d = int(np.prod(self.dims))
        if d > self.max_dim:
            raise ValueError(f"full dimension {d} exceeds the cap {self.max_dim}")
        if len(self.local_hamiltonians) != len(self.dims):
            raise DimensionMismatch("one local Hamiltonian per subsystem is required")
        self.local_hamiltonians = [as_hermitian(h, dj) for h, dj in zip(self.local_hamiltonians, self.dims)]
        h = sum(local_operator(hj, j, self.dims) for j, hj in enumerate(self.local_hamiltonians))
        if self.interaction is not None:
            self.interaction = as_hermitian(self.interaction, d)
            h = h + self.interaction
        self.hamiltonian = hermitize(h)
        taus = self.taus if self.taus is not None else [self.tau] * len(self.dims)
        if len(taus) != len(self.dims):
            raise DimensionMismatch("one tau per subsystem is required")
        self.taus = [_as_relaxation(t) for t in taus]
        self.global_numbers = []
        if self.local_numbers is not None:
            for j, n in enumerate(self.local_numbers):
                if n is None:
                    continue
                g = local_operator(as_hermitian(n, self.dims[j]), j, self.dims)
                if np.max(np.abs(g @ self.hamiltonian - self.hamiltonian @ g)) > 1e-10:
                    raise ValueError(f"number operator of subsystem {j} does not commute with H")
                self.global_numbers.append(g)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def conserved_observables(self) -> list:
        return [self.hamiltonian] + list(self.global_numbers)

    def with_local_hamiltonian(self, j: int, h) -> "CompositeModel":
        hs = list(self.local_hamiltonians)
        hs[j] = h
        return CompositeModel(self.dims, hs, self.interaction, list(self.taus), self.tau, self.local_numbers, self.max_dim)

    def evaluate(self, rho) -> GeneratorEvaluation:
        return composite_generator(rho, self)

    def rhs(self, rho) -> np.ndarray:
        return self.evaluate(rho).total


@dataclass(frozen=True, eq=False)
class LocalPerception:
    subsystem: int
    rho_j: StateOperator
    rho_rest: np.ndarray
    entropy_op: np.ndarray
    hamiltonian: np.ndarray
    numbers: tuple = ()


def _perceive(f: np.ndarray, weight: np.ndarray, j: int, dims) -> np.ndarray:
    return hermitize(partial_trace(weight @ f, dims, [j]))


def local_perception(rho, model: CompositeModel, j: int, entropy_op: np.ndarray | None = None) -> LocalPerception:
    """Perceived entropy ``(S)^J`` (``S = -P_Ran ln rho``), Hamiltonian and numbers for subsystem ``j``."""
    rho = as_state(rho)
    dims = model.dims
    if not 0 <= j < len(dims):
        raise BadIndexSet(f"subsystem {j} out of range")
    rest = [k for k in range(len(dims)) if k != j]
    rho_j = reduced_state(rho.op, dims, [j])
    rho_rest = hermitize(partial_trace(rho.op, dims, rest)) if rest else np.ones((1, 1), dtype=complex)
    weight = embed(np.eye(dims[j]), [j], rho_rest, rest, dims)
    s = -log_on_range(rho) if entropy_op is None else entropy_op
    return LocalPerception(
        j,
        rho_j,
        rho_rest,
        _perceive(s, weight, j, dims),
        _perceive(model.hamiltonian, weight, j, dims),
        tuple(_perceive(n, weight, j, dims) for n in model.global_numbers),
    )


def _subsystem_term(rho: StateOperator, model: CompositeModel, j: int, s_full: np.ndarray):
    lp = local_perception(rho, model, j, s_full)
    rj = lp.rho_j
    u = rj.eigenvectors
    ops = [lp.hamiltonian] + list(lp.numbers)
    ops_eig = np.stack([dag(u) @ o @ u for o in ops])
    tau_j = model.taus[j](rho)
    a_eig, d_eig, mult, kept, rate = _backend.project_dissipator(
        rj.eigenvalues, dag(u) @ lp.entropy_op @ u, ops_eig, tau_j, PIVOT_TOL
    )
    d_local = hermitize(u @ d_eig @ dag(u))
    a_local = hermitize(u @ a_eig @ dag(u))
    return lp, d_local, a_local, np.asarray(mult), np.asarray(kept), float(rate), tau_j


def composite_generator(rho, model: CompositeModel) -> GeneratorEvaluation:
    """Full generator: ``-i[H, rho] + sum_J {(dM_J)^J, rho_J} (x) rho_Jbar / (2 tau_J)``."""
    rho = as_state(rho)
    if rho.dim != model.dim:
        raise DimensionMismatch(f"state dimension {rho.dim} does not match model dimension {model.dim}")
    h = model.hamiltonian
    ham = -1j * (h @ rho.op - rho.op @ h)
    s_full = -log_on_range(rho)
    dims = model.dims
    diss = np.zeros_like(rho.op)
    parts = []
    mults = []
    dropped = []
    total_rate = 0.0
    for j in range(len(dims)):
        lp, d_local, _, mult, kept, rate, _ = _subsystem_term(rho, model, j, s_full)
        rest = [k for k in range(len(dims)) if k != j]
        diss = diss + embed(d_local, [j], lp.rho_rest, rest, dims)
        dropped += [(j, int(i)) for i in np.flatnonzero(kept == 0)]
        mults.append(mult)
        total_rate += rate
        parts.append(GeneratorEvaluation(np.zeros_like(d_local), d_local, mult, rate, tuple(int(i) for i in np.flatnonzero(kept == 0))))
    diss = hermitize(diss)
    resid = float(np.sqrt(sum(p.entropy_production * model.taus[j](rho) for j, p in enumerate(parts))))
    return GeneratorEvaluation(ham, diss, np.concatenate(mults), total_rate, tuple(dropped), resid, tuple(parts))


def reduced_generator(rho, model: CompositeModel, part: Sequence[int]) -> np.ndarray:
    """Time derivative of ``rho_A`` (``A = part``) from the reduced equations for non-interacting parts.

    Valid when no interaction couples ``A`` to the rest; ``(dM_J)^J`` is still
    evaluated at the full state.
    """
    rho = as_state(rho)
    dims = model.dims
    part = _check_keep(part, len(dims))
    if model.interaction is not None and np.max(np.abs(model.interaction)) > 0:
        raise ValueError("reduced equations require a model without interaction")
    sub_dims = [dims[k] for k in part]
    rho_a = hermitize(partial_trace(rho.op, dims, part))
    h_a = sum(local_operator(model.local_hamiltonians[k], i, sub_dims) for i, k in enumerate(part))
    out = -1j * (h_a @ rho_a - rho_a @ h_a)
    s_full = -log_on_range(rho)
    for i, k in enumerate(part):
        _, d_local, *_ = _subsystem_term(rho, model, k, s_full)
        others = [m for m in range(len(part)) if m != i]
        rest = hermitize(partial_trace(rho_a, sub_dims, others)) if others else np.ones((1, 1), dtype=complex)
        out = out + embed(d_local, [i], rest, others, sub_dims)
    return hermitize(out)


@dataclass(frozen=True)
class LocalityReport:
    max_distance: float
    distances: tuple
    passed: bool
    tolerance: float


def locality_check(
    model: CompositeModel,
    rho,
    hb_variants: Sequence,
    t_final: float,
    config=None,
    sample_every: float = 0.25,
    part_b: int = 1,
    part_a: Sequence[int] = (0,),
    tol: float = 1e-7,
) -> LocalityReport:
    """Evolve under each replacement Hamiltonian of subsystem ``part_b`` and compare reductions onto ``part_a``.

    Reports the largest trace distance, over samples and variants, from the
    reduced trajectory of the first variant.
    """
    from .propagator import evolve

    if len(hb_variants) < 2:
        raise ValueError("need at least two Hamiltonian variants")
    reductions = []
    for hb in hb_variants:
        m = model.with_local_hamiltonian(part_b, hb)
        traj = evolve(rho, m, t_final, config, sample_every=sample_every)
        reductions.append([partial_trace(s.state.op, model.dims, part_a) for s in traj.samples])
    ref = reductions[0]
    dists = []
    for red in reductions[1:]:
        n = min(len(ref), len(red))
        dists.append(max(trace_distance(a, b) for a, b in zip(ref[:n], red[:n])))
    worst = max(dists)
    return LocalityReport(worst, tuple(dists), worst < tol, tol)


BELL = np.array(
    [
        [1, 0, 0, 1],
        [1, 0, 0, -1],
        [0, 1, 1, 0],
        [0, 1, -1, 0],
    ],
    dtype=complex,
) / np.sqrt(2.0)


def bell_diagonal_state(weights) -> np.ndarray:
    """Two-qubit mixture of the four Bell states (Phi+, Phi-, Psi+, Psi-)."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (4,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("Bell-diagonal weights must be 4 non-negative numbers summing to 1")
    return sum(wi * np.outer(b, b.conj()) for wi, b in zip(w, BELL))
