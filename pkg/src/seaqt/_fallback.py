"""Pure-numpy versions of the generator kernels.

All inputs are expressed in the eigenbasis of the state, where ``rho`` is
``diag(p)``.  The compiled module ``_kernels`` exposes the same functions.
"""

import numpy as np


def _cov(p, f, g, mf, mg):
    return float(np.real(np.sum(p[:, None] * f * g.conj()))) - mf * mg


def project_dissipator(p, target, ops, tau, tol=1e-12):
    """Residual of ``target`` orthogonal to span{sqrt(rho) I, sqrt(rho) R_a}.

    Returns ``(A, D, multipliers, kept, rate)`` where ``A = dT - sum l_a dR_a``,
    ``D = {A, rho} / (2 tau)``, ``multipliers = [l_0, l_1, ...]`` (``l_0`` on
    the identity), ``kept`` flags retained constraints and
    ``rate = (sqrt(rho) A | sqrt(rho) A) / tau``.
    """
    p = np.asarray(p, dtype=float)
    target = np.asarray(target, dtype=complex)
    ops = np.asarray(ops, dtype=complex).reshape(-1, p.size, p.size)
    k = ops.shape[0]
    diag_ops = np.real(np.diagonal(ops, axis1=1, axis2=2))
    means = diag_ops @ p
    mt = float(np.real(np.diagonal(target)) @ p)

    gram = np.empty((k, k))
    rhs = np.empty(k)
    for a in range(k):
        rhs[a] = _cov(p, target, ops[a], mt, means[a])
        for b in range(a, k):
            gram[a, b] = gram[b, a] = _cov(p, ops[a], ops[b], means[a], means[b])

    # order-preserving Cholesky; dependent rows dropped
    kept = np.zeros(k, dtype=np.uint8)
    idx = []
    fac = np.zeros((k, k))
    for i in range(k):
        m = len(idx)
        row = np.empty(m)
        for a in range(m):
            row[a] = (gram[i, idx[a]] - row[:a] @ fac[a, :a]) / fac[a, a]
        piv = gram[i, i] - row @ row
        if piv <= tol * max(1.0, gram[i, i]):
            continue
        fac[m, :m] = row
        fac[m, m] = np.sqrt(piv)
        idx.append(i)
        kept[i] = 1
    m = len(idx)
    lam = np.zeros(k)
    if m:
        fm = fac[:m, :m]
        y = np.linalg.solve(fm, rhs[idx]) if m > 1 else rhs[idx] / fm[0, 0]
        lam[idx] = np.linalg.solve(fm.T, y) if m > 1 else y / fm[0, 0]

    a_op = target - mt * np.eye(p.size)
    for a in idx:
        a_op = a_op - lam[a] * (ops[a] - means[a] * np.eye(p.size))
    mult = np.empty(k + 1)
    mult[0] = mt - lam @ means
    mult[1:] = lam
    d_op = a_op * (p[:, None] + p[None, :]) / (2.0 * tau)
    rate = float(np.sum(p[:, None] * np.abs(a_op) ** 2)) / tau
    return a_op, d_op, mult, kept, rate


def hamiltonian_eig(p, h):
    """``-i [H, rho]`` for ``rho = diag(p)``."""
    p = np.asarray(p, dtype=float)
    return -1j * np.asarray(h, dtype=complex) * (p[None, :] - p[:, None])
