"""Dense Hermitian operator algebra.

Operators are plain complex ``numpy`` arrays.  Density operators are wrapped
in :class:`StateOperator`, which caches a clamped spectral decomposition so
that the kernel (exactly-zero eigenvalues) is represented discretely.

Units: hbar = k_B = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NotAState

TOL_HERM = 1e-12
ZERO_TOL = 1e-12
TOL_PSD = 1e-12
PIVOT_TOL = 1e-12


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, tol: float = TOL_HERM) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def as_operator(a, dim: int | None = None) -> np.ndarray:
    """Coerce to a square complex matrix, optionally checking its dimension."""
    if isinstance(a, StateOperator):
        a = a.op
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {a.shape[0]}")
    return a


def as_hermitian(a, dim: int | None = None, tol: float = TOL_HERM) -> np.ndarray:
    a = as_operator(a, dim)
    if not is_hermitian(a, tol):
        raise ValueError(f"operator is not Hermitian (max deviation {np.max(np.abs(a - dag(a))):.3e})")
    return hermitize(a)


@dataclass(frozen=True, eq=False)
class StateOperator:
    """Density operator with its clamped spectral decomposition.

    ``eigenvalues`` are sorted descending; ``kernel_mask`` flags the entries
    clamped to exactly zero.  ``op`` is rebuilt from the clamped spectrum.
    """

    op: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kernel_mask: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.op.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(~self.kernel_mask))

    @property
    def kernel_dim(self) -> int:
        return int(np.count_nonzero(self.kernel_mask))

    @property
    def support_vectors(self) -> np.ndarray:
        return self.eigenvectors[:, ~self.kernel_mask]

    @property
    def support_projector(self) -> np.ndarray:
        v = self.support_vectors
        return v @ dag(v)

    def expect(self, f: np.ndarray) -> float:
        return float(np.real(np.trace(self.op @ f)))

    def to_eigenbasis(self, f: np.ndarray) -> np.ndarray:
        u = self.eigenvectors
        return dag(u) @ f @ u

    def from_eigenbasis(self, f: np.ndarray) -> np.ndarray:
        u = self.eigenvectors
        return u @ f @ dag(u)

    def function(self, values: np.ndarray) -> np.ndarray:
        """Operator ``U diag(values) U^dagger``."""
        u = self.eigenvectors
        return (u * values) @ dag(u)


def spectral_decompose(
    op, zero_tol: float = ZERO_TOL, n_kernel: int | None = None, renormalize: bool = True
) -> StateOperator:
    """Validate ``op`` as a density operator and clamp its spectrum.

    Eigenvalues in ``[-zero_tol, zero_tol]`` become exactly zero and are
    flagged in the kernel mask; the support is renormalized to unit trace.
    With ``n_kernel`` the that-many smallest eigenvalues are forced to zero
    (kernel lock) regardless of their value.
    """
    a = as_operator(op)
    dev = np.max(np.abs(a - dag(a)), initial=0.0)
    if dev > TOL_HERM * max(1.0, np.max(np.abs(a), initial=0.0)):
        raise NotAState(f"operator is not Hermitian (max deviation {dev:.3e})")
    a = hermitize(a)
    tr = float(np.real(np.trace(a)))
    if abs(tr - 1.0) > 1e-6:
        raise NotAState(f"trace {tr!r} differs from 1")
    w, u = np.linalg.eigh(a)
    w = w[::-1].copy()
    u = u[:, ::-1].copy()
    if n_kernel is None:
        if w[-1] < -zero_tol:
            raise NotAState(f"negative eigenvalue {w[-1]:.3e}")
        mask = np.abs(w) <= zero_tol
    else:
        mask = np.zeros(w.shape, dtype=bool)
        if n_kernel:
            mask[-n_kernel:] = True
        if np.any(w[~mask] <= 0.0):
            raise NotAState(f"support eigenvalue {w[~mask].min():.3e} is not positive")
    w[mask] = 0.0
    total = w.sum()
    if total <= 0.0:
        raise NotAState("no positive eigenvalues")
    if renormalize:
        w /= total
    rebuilt = (u * w) @ dag(u)
    return StateOperator(rebuilt, w, u, mask)


def as_state(rho, zero_tol: float = ZERO_TOL) -> StateOperator:
    if isinstance(rho, StateOperator):
        return rho
    return spectral_decompose(rho, zero_tol)


def real_scalar_product(f, g) -> float:
    """``(F|G) = Tr(F^dagger G + G^dagger F) / 2``."""
    f = as_operator(f)
    g = as_operator(g, f.shape[0])
    # Tr(F^dagger G) = sum conj(F_ij) G_ij
    return float(np.real(np.vdot(f, g)))


def sqrt_state(rho: StateOperator) -> np.ndarray:
    return rho.function(np.sqrt(rho.eigenvalues))


def log_on_range(rho: StateOperator) -> np.ndarray:
    """``ln rho`` on the support and zero on the kernel."""
    return rho.function(_log_support(rho))


def _log_support(rho: StateOperator) -> np.ndarray:
    out = np.zeros_like(rho.eigenvalues)
    s = ~rho.kernel_mask
    out[s] = np.log(rho.eigenvalues[s])
    return out


def entropy(rho) -> float:
    """Von Neumann entropy in units of k_B."""
    rho = as_state(rho)
    p = rho.eigenvalues[~rho.kernel_mask]
    return float(max(-np.dot(p, np.log(p)), 0.0))


def centered(f, rho: StateOperator) -> np.ndarray:
    """``F - Tr(rho F) I``."""
    f = as_operator(f, rho.dim)
    return f - rho.expect(f) * np.eye(rho.dim)


def covariance(f, g, rho: StateOperator) -> float:
    """``(sqrt(rho) dF | sqrt(rho) dG) = Tr(rho {dF, dG}) / 2``."""
    df = centered(f, rho)
    dg = centered(g, rho)
    return float(np.real(np.trace(rho.op @ df @ dg)))


def covariance_matrix(ops: Sequence[np.ndarray], rho: StateOperator) -> np.ndarray:
    # Re Tr(rho dF dG) evaluated in the eigenbasis of rho.
    p = rho.eigenvalues
    mats = [rho.to_eigenbasis(centered(f, rho)) for f in ops]
    n = len(mats)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = float(np.real(np.sum(p[:, None] * mats[i] * mats[j].T)))
            out[i, j] = out[j, i] = v
    return out


def ordered_cholesky(gram: np.ndarray, tol: float = PIVOT_TOL):
    """Cholesky factorization that drops dependent rows in list order.

    Returns ``(factor, kept)`` where ``kept`` indexes the retained rows and
    ``factor`` is the lower-triangular factor of ``gram[kept][:, kept]``.
    A row is dropped when its pivot falls below ``tol * max(1, G_ii)``.
    """
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    kept: list[int] = []
    factor = np.zeros((n, n))
    for i in range(n):
        m = len(kept)
        row = np.empty(m)
        for a in range(m):
            row[a] = (gram[i, kept[a]] - row[:a] @ factor[a, :a]) / factor[a, a]
        pivot = gram[i, i] - row @ row
        if pivot <= tol * max(1.0, gram[i, i]):
            continue
        factor[m, :m] = row
        factor[m, m] = np.sqrt(pivot)
        kept.append(i)
    m = len(kept)
    return factor[:m, :m], kept


def gram_determinant(ops: Sequence[np.ndarray], rho: StateOperator, tol: float = PIVOT_TOL) -> float:
    """Determinant of the covariance matrix of ``ops`` at ``rho``.

    Exactly zero when the centered, sqrt(rho)-weighted operators are linearly
    dependent (pivot below ``tol``); otherwise the product of squared pivots.
    """
    gram = covariance_matrix(ops, rho)
    factor, kept = ordered_cholesky(gram, tol)
    if len(kept) < len(ops):
        return 0.0
    return float(np.prod(np.diag(factor)) ** 2)


def trace_distance(a, b) -> float:
    d = as_operator(a) - as_operator(b)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(hermitize(d)))))


def max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * hermitize(g)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank (full by default)."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ dag(g)
    return hermitize(rho / np.real(np.trace(rho)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def gibbs_state(h, beta: float, extra=None, nu: float = 0.0) -> np.ndarray:
    """``exp(-beta H + nu N) / Tr(...)``; ``extra`` must commute with ``h``."""
    h = as_hermitian(h)
    g = -beta * h
    if extra is not None:
        g = g + nu * as_hermitian(extra, h.shape[0])
    w, u = np.linalg.eigh(hermitize(g))
    x = np.exp(w - w.max())
    x /= x.sum()
    return hermitize((u * x) @ dag(u))
