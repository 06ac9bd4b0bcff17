"""Two-level specialization in Bloch coordinates.

Conventions: ``rho = (I + r.sigma)/2`` and ``H = omega (I + h.sigma)/2`` with
the Pauli matrices ``sigma``, so the eigenvalues of ``rho`` are
``(1 +- |r|)/2`` and the energy levels are ``0`` and ``omega``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NotAState
from .generator import RelaxationSpec, SystemModel
from .operators import StateOperator, as_state, spectral_decompose

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# distance to the singular set below which series/limit forms are used
_SWITCH = 1e-6


@dataclass(frozen=True)
class BlochModel:
    omega: float
    h: tuple
    tau: float = 1.0

    def __init__(self, omega: float, h, tau: float = 1.0):
        h = np.asarray(h, dtype=float)
        if h.shape != (3,) or abs(np.linalg.norm(h) - 1.0) > 1e-12:
            raise ValueError(f"h must be a unit 3-vector, got {h!r}")
        if not omega > 0 or not tau > 0:
            raise ValueError("omega and tau must be positive")
        object.__setattr__(self, "omega", float(omega))
        object.__setattr__(self, "h", tuple(float(x) for x in h))
        object.__setattr__(self, "tau", float(tau))

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.omega * 0.5 * (np.eye(2) + np.einsum("i,ijk->jk", np.array(self.h), PAULI))

    def to_system_model(self) -> SystemModel:
        return SystemModel(self.hamiltonian, relaxation=RelaxationSpec(self.tau))

    @classmethod
    def from_hamiltonian(cls, h_op, tau: float = 1.0) -> "BlochModel":
        """Inverse of :attr:`hamiltonian`; requires a ground level at 0."""
        h_op = np.asarray(h_op, dtype=complex)
        w = np.linalg.eigvalsh(h_op)
        if abs(w[0]) > 1e-12 * max(1.0, abs(w[1])):
            raise ValueError("qubit Hamiltonian must have its ground level at zero")
        omega = float(w[1] - w[0])
        vec = np.real(np.einsum("ijk,kj->i", PAULI, h_op)) / omega
        return cls(omega, vec / np.linalg.norm(vec), tau)


def bloch_to_density(r) -> StateOperator:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must have 3 components")
    if np.linalg.norm(r) > 1.0 + 1e-12:
        raise NotAState(f"|r| = {np.linalg.norm(r):.15g} exceeds 1")
    return spectral_decompose(0.5 * (np.eye(2) + np.einsum("i,ijk->jk", r, PAULI)))


def density_to_bloch(rho) -> np.ndarray:
    rho = as_state(rho)
    if rho.dim != 2:
        raise ValueError("density_to_bloch needs a 2x2 state")
    return np.real(np.einsum("ijk,kj->i", PAULI, rho.op))


def _radial_coefficient(r: float) -> float:
    """``(1 - r^2)/(2r) ln((1-r)/(1+r))``, with its limits -1 at 0 and 0 at 1."""
    if r < _SWITCH:
        # -(1 - r^2)(1 + r^2/3 + r^4/5)
        r2 = r * r
        return -(1.0 - r2) * (1.0 + r2 / 3.0 + r2 * r2 / 5.0)
    if r >= 1.0:
        return 0.0
    return (1.0 - r * r) / (2.0 * r) * (np.log1p(-r) - np.log1p(r))


def bloch_rhs(r, model: BlochModel, dissipation: bool = True) -> np.ndarray:
    """Bloch-vector velocity: precession about ``h`` plus SEA relaxation.

    The dissipative part lies in the constant-energy plane and points toward
    the ``h`` axis:

        (1/tau) * g(|r|) * (r - (h.r) h) / (1 - (h.r)^2)

    with ``g`` from :func:`_radial_coefficient` (which is negative inside the
    ball).  ``1 - (h.r)^2`` is evaluated as ``1 - |r|^2 + |r_perp|^2`` to
    stay accurate near the ``h`` axis; pure states (``|r| = 1``) relax at
    rate zero.
    """
    r = np.asarray(r, dtype=float)
    h = np.array(model.h)
    nr = float(np.linalg.norm(r))
    if nr > 1.0 + 1e-12:
        raise NotAState(f"|r| = {nr:.15g} exceeds 1")
    ham = model.omega * np.cross(h, r)
    if not dissipation:
        return ham
    hr = float(h @ r)
    perp = r - hr * h
    p2 = float(perp @ perp)
    denom = max(1.0 - nr * nr, 0.0) + p2
    if nr >= 1.0 - 1e-15 or p2 == 0.0 or denom == 0.0:
        return ham
    return ham + _radial_coefficient(nr) / model.tau * perp / denom


def central_plane_solution(r0: float, tau: float, t) -> np.ndarray:
    """Radius at time ``t`` for a start on the central plane (``h.r0 = 0``).

    ``ln((1-r)/(1+r))`` decays as ``exp(-t/tau)``, so
    ``r(t) = tanh(-exp(-t/tau) ln((1-r0)/(1+r0)) / 2)``.
    """
    if not 0.0 < r0 < 1.0:
        raise DomainError(f"r0 must lie in (0, 1), got {r0!r}")
    if not tau > 0:
        raise DomainError("tau must be positive")
    t = np.asarray(t, dtype=float)
    lam0 = np.log1p(-r0) - np.log1p(r0)
    return np.tanh(-0.5 * np.exp(-t / tau) * lam0)


def bloch_entropy(r: float) -> float:
    """Entropy of a qubit with Bloch radius ``r``."""
    if not 0.0 <= r <= 1.0 + 1e-12:
        raise DomainError(f"radius {r!r} outside [0, 1]")
    out = 0.0
    for p in (0.5 * (1 + r), 0.5 * (1 - r)):
        if p > 0:
            out -= p * np.log(p)
    return float(out)


def isoentropic_radius(s_target: float) -> float:
    """Bloch radius with entropy ``s_target`` (bracketed root solve to 1e-12 and below)."""
    ln2 = np.log(2.0)
    if not 0.0 <= s_target <= ln2 + 1e-15:
        raise DomainError(f"entropy {s_target!r} outside [0, ln 2]")
    if s_target >= ln2:
        return 0.0
    if s_target <= 0.0:
        return 1.0
    return float(brentq(lambda r: bloch_entropy(r) - s_target, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))
