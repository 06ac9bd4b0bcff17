"""Independent reference implementations used only by the tests."""

import numpy as np
import scipy.linalg as sla


def _realvec(m):
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


def lstsq_dissipator(rho, constraints, tau=1.0):
    """Dissipative term via least squares on sqrt(rho)-weighted operators.

    Minimizes ||sqrt(rho)(S - c0 I - sum c_a R_a)|| with S = -logm(rho) and
    returns ({A, rho}/(2 tau), rate) for the residual operator A.
    Full-rank states only.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    sq = sla.sqrtm(rho)
    s = -sla.logm(rho)
    basis = [np.eye(d)] + [np.asarray(r, dtype=complex) for r in constraints]
    mat = np.stack([_realvec(sq @ b) for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(mat, _realvec(sq @ s), rcond=1e-12)
    a = s - sum(c * b for c, b in zip(coef, basis))
    d_term = (a @ rho + rho @ a) / (2 * tau)
    rate = float(np.real(np.trace(rho @ a @ a))) / tau
    return 0.5 * (d_term + d_term.conj().T), rate


def entropy_of(rho):
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log(w)))


def expm_unitary(h, t):
    return sla.expm(-1j * t * np.asarray(h))


def ptrace_loops(rho, dims, keep):
    """Partial trace by explicit index loops (keep: sorted list)."""
    import itertools

    n = len(dims)
    rest = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = np.zeros((dk, dk), dtype=complex)
    t = np.asarray(rho).reshape(list(dims) * 2)
    for a in itertools.product(*[range(dims[k]) for k in keep]):
        for b in itertools.product(*[range(dims[k]) for k in keep]):
            val = 0.0
            for r in itertools.product(*[range(dims[k]) for k in rest]):
                i = [0] * n
                j = [0] * n
                for pos, k in enumerate(keep):
                    i[k], j[k] = a[pos], b[pos]
                for pos, k in enumerate(rest):
                    i[k] = j[k] = r[pos]
                val += t[tuple(i + j)]
            ia = int(np.ravel_multi_index(a, [dims[k] for k in keep])) if keep else 0
            ib = int(np.ravel_multi_index(b, [dims[k] for k in keep])) if keep else 0
            out[ia, ib] = val
    return out
