"""Generalized affinities and Onsager conductivities at arbitrary states.

Any state is written as ``rho = B exp(-sum f_j X_j) B / Z`` with ``B`` the
range projector.  The dissipative rates ``Dx_i/Dt = Tr(D X_i)`` then obey
``Dx_i/Dt = sum_j L_ij f_j`` with ``L`` a symmetric PSD Gram matrix of the
constraint-orthogonal components of ``sqrt(rho) X_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .errors import SingularBasis
from .generator import (
    _as_constraints,
    _as_relaxation,
    _kept_indices,
    dissipative_term_projection,
    entropy_production_rate,
)
from .operators import PIVOT_TOL, StateOperator, as_hermitian, as_state, covariance_matrix, dag, entropy, log_on_range

PINV_CUTOFF = 1e-12


def gell_mann(n: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices of size ``n`` (``n^2 - 1`` of them), ``Tr(g_a g_b) = 2 delta_ab``."""
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            out += [s, a]
    for l in range(1, n):
        d = np.zeros((n, n), dtype=complex)
        d[np.arange(l), np.arange(l)] = 1.0
        d[l, l] = -l
        out.append(np.sqrt(2.0 / (l * (l + 1))) * d)
    return out


@dataclass(frozen=True, eq=False)
class ObservableBasis:
    projector: np.ndarray
    operators: tuple
    label: str = "custom"

    def __len__(self):
        return len(self.operators)


def default_basis(rho) -> ObservableBasis:
    """Generalized Gell-Mann basis on ``Ran rho``, zero on the kernel."""
    rho = as_state(rho)
    v = rho.support_vectors
    ops = tuple(v @ g @ dag(v) for g in gell_mann(v.shape[1]))
    return ObservableBasis(rho.support_projector, ops, "gell-mann")


def custom_basis(rho, operators: Sequence) -> ObservableBasis:
    rho = as_state(rho)
    return ObservableBasis(rho.support_projector, tuple(as_hermitian(x, rho.dim) for x in operators))


def _weighted_gram(rho: StateOperator, ops: Sequence[np.ndarray]) -> np.ndarray:
    """Uncentered ``(sqrt(rho) F | sqrt(rho) G) = Re Tr(rho F G)``."""
    p = np.sqrt(rho.eigenvalues)
    w = np.stack([(p[:, None] * rho.to_eigenbasis(o)).ravel() for o in ops])
    g = np.real(w.conj() @ w.T)
    return 0.5 * (g + g.T)


@dataclass(frozen=True)
class AffinityVector:
    f0: float
    f: np.ndarray
    residual: float


def affinities(rho, basis: ObservableBasis | None = None) -> AffinityVector:
    """Least-squares fit of ``sqrt(rho) ln rho = -f0 sqrt(rho) - sum f_j sqrt(rho) X_j``."""
    rho = as_state(rho)
    basis = basis or default_basis(rho)
    ops = [np.eye(rho.dim, dtype=complex)] + list(basis.operators)
    gram = _weighted_gram(rho, ops)
    ev = np.linalg.eigvalsh(gram)
    if ev[0] <= 1e-12 * max(1.0, ev[-1]):
        raise SingularBasis(f"basis restricted to the support is linearly dependent (min Gram eigenvalue {ev[0]:.3e})")
    sq = np.sqrt(rho.eigenvalues)
    lnr = rho.to_eigenbasis(log_on_range(rho))
    target = (sq[:, None] * lnr).ravel()
    w = np.stack([(sq[:, None] * rho.to_eigenbasis(o)).ravel() for o in ops])
    rhs = np.real(w.conj() @ target)
    c = np.linalg.solve(gram, rhs)
    resid = float(np.linalg.norm(target - c @ w))
    return AffinityVector(float(-c[0]), -c[1:], resid)


def _projected(rho: StateOperator, basis: ObservableBasis, constraints, tau: float):
    """Residual operators (eigenbasis) of each ``X_i`` after removing the constraint span."""
    cons = _as_constraints(constraints)
    u = rho.eigenvectors
    if len(cons):
        ops_eig = np.stack([dag(u) @ o @ u for o in cons])
    else:
        ops_eig = np.zeros((0, rho.dim, rho.dim), dtype=complex)
    res = []
    for x in basis.operators:
        a_eig, *_ = _backend.project_dissipator(rho.eigenvalues, dag(u) @ x @ u, ops_eig, tau, PIVOT_TOL)
        res.append(a_eig)
    return res


@dataclass(frozen=True)
class ConductivityMatrix:
    L: np.ndarray
    rank: int
    min_eigenvalue: float


def conductivities(rho, basis: ObservableBasis | None = None, constraints=(), tau=1.0) -> ConductivityMatrix:
    """``L_ij = ([sqrt(rho) X_i]_perp | [sqrt(rho) X_j]_perp) / tau``."""
    rho = as_state(rho)
    basis = basis or default_basis(rho)
    t = _as_relaxation(tau)(rho)
    res = _projected(rho, basis, constraints, t)
    sq = np.sqrt(rho.eigenvalues)
    w = np.stack([(sq[:, None] * a).ravel() for a in res])
    lmat = np.real(w.conj() @ w.T) / t
    lmat = 0.5 * (lmat + lmat.T)
    ev = np.linalg.eigvalsh(lmat)
    cutoff = PINV_CUTOFF * max(1.0, ev[-1])
    return ConductivityMatrix(lmat, int(np.count_nonzero(ev > cutoff)), float(ev[0]))


def conductivities_determinant(rho, basis: ObservableBasis | None = None, constraints=(), tau=1.0) -> np.ndarray:
    """Same matrix from bordered covariance determinants over ``Gamma({sqrt(rho) R_k})``."""
    rho = as_state(rho)
    basis = basis or default_basis(rho)
    cons = _as_constraints(constraints)
    t = _as_relaxation(tau)(rho)
    rs = [cons.observables[i] for i in _kept_indices(rho, cons.observables)]
    xs = list(basis.operators)
    cov = covariance_matrix(xs + rs, rho)
    nx = len(xs)
    crr = cov[nx:, nx:]
    gamma = np.linalg.det(crr) if rs else 1.0
    out = np.empty((nx, nx))
    for i in range(nx):
        for j in range(nx):
            top = np.concatenate([[cov[i, j]], cov[nx:, j]])
            side = cov[nx:, i]
            m = np.empty((len(rs) + 1, len(rs) + 1))
            m[0] = top
            m[1:, 0] = side
            m[1:, 1:] = crr
            out[i, j] = np.linalg.det(m) / gamma
    return out / t


@dataclass(frozen=True)
class DissipativeRates:
    from_generator: np.ndarray
    from_affinities: np.ndarray
    residual: float


def dissipative_rates(rho, basis: ObservableBasis | None = None, constraints=(), tau=1.0) -> DissipativeRates:
    """Dissipative rates ``Tr(D X_i)`` and, independently, ``L f``."""
    rho = as_state(rho)
    basis = basis or default_basis(rho)
    t = _as_relaxation(tau)(rho)
    d = dissipative_term_projection(rho, constraints, t).dissipative_term
    gen = np.array([float(np.real(np.trace(d @ x))) for x in basis.operators])
    f = affinities(rho, basis).f
    lf = conductivities(rho, basis, constraints, t).L @ f
    return DissipativeRates(gen, lf, float(np.max(np.abs(gen - lf), initial=0.0)))


@dataclass(frozen=True)
class QuadraticForms:
    rate_fLf: float
    rate_Linv: float
    rank: int
    singular: bool


def entropy_production_quadratic_forms(rho, basis: ObservableBasis | None = None, constraints=(), tau=1.0) -> QuadraticForms:
    """Entropy production as ``f.L.f`` and as ``r.L^+.r`` over the dissipative rates ``r``.

    The inverse form uses the pseudo-inverse on the range of ``L`` (cutoff
    ``1e-12`` relative to its largest eigenvalue); ``singular`` flags rank
    deficiency.
    """
    rho = as_state(rho)
    basis = basis or default_basis(rho)
    t = _as_relaxation(tau)(rho)
    cm = conductivities(rho, basis, constraints, t)
    f = affinities(rho, basis).f
    rates = dissipative_rates(rho, basis, constraints, t).from_generator
    ev, vec = np.linalg.eigh(cm.L)
    keep = ev > PINV_CUTOFF * max(1.0, ev[-1])
    proj = vec[:, keep].T @ rates
    inv_form = float(np.sum(proj**2 / ev[keep]))
    return QuadraticForms(float(f @ cm.L @ f), inv_form, int(keep.sum()), bool(keep.sum() < len(ev)))


@dataclass(frozen=True, eq=False)
class OnsagerReport:
    basis_label: str
    rank_rho: int
    f0: float
    f: np.ndarray
    L: np.ndarray
    entropy_production_gram: float
    entropy_production_fLf: float
    entropy_production_Linv: float
    residuals: dict = field(default_factory=dict)
    L_rank: int = 0
    L_singular: bool = False

    def to_dict(self) -> dict:
        return {
            "basis": {"label": self.basis_label, "count": int(len(self.f)), "rank_rho": self.rank_rho},
            "f0": self.f0,
            "f": [float(x) for x in self.f],
            "L": [[float(x) for x in row] for row in self.L],
            "L_rank": self.L_rank,
            "L_singular": self.L_singular,
            "entropy_production": {
                "gram_ratio": self.entropy_production_gram,
                "affinity_form": self.entropy_production_fLf,
                "rate_form": self.entropy_production_Linv,
            },
            "residuals": dict(self.residuals),
        }


def onsager_report(rho, constraints=(), tau=1.0, basis: ObservableBasis | None = None) -> OnsagerReport:
    rho = as_state(rho)
    basis = basis or default_basis(rho)
    t = _as_relaxation(tau)(rho)
    aff = affinities(rho, basis)
    cm = conductivities(rho, basis, constraints, t)
    rates = dissipative_rates(rho, basis, constraints, t)
    qf = entropy_production_quadratic_forms(rho, basis, constraints, t)
    gram = entropy_production_rate(rho, constraints, t)
    s_fit = aff.f0 + float(aff.f @ np.array([rho.expect(x) for x in basis.operators]))
    residuals = {
        "affinity_reconstruction": aff.residual,
        "entropy_identity": abs(s_fit - entropy(rho)),
        "rates_consistency": rates.residual,
        "L_symmetry": float(np.max(np.abs(cm.L - cm.L.T), initial=0.0)),
        "L_min_eigenvalue": cm.min_eigenvalue,
        "gram_vs_fLf": abs(gram - qf.rate_fLf),
        "gram_vs_Linv": abs(gram - qf.rate_Linv),
    }
    return OnsagerReport(
        basis.label, rho.rank, aff.f0, aff.f, cm.L, gram, qf.rate_fLf, qf.rate_Linv, residuals, cm.rank, qf.singular
    )
