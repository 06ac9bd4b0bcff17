import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from seaqt.errors import NotAState
from seaqt.operators import (
    as_state,
    centered,
    covariance,
    covariance_matrix,
    entropy,
    gibbs_state,
    gram_determinant,
    log_on_range,
    ordered_cholesky,
    random_density,
    random_hermitian,
    real_scalar_product,
    spectral_decompose,
    sqrt_state,
    trace_distance,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 5)


def test_entropy_diag_quarter():
    # -(1/4 ln 1/4 + 3/4 ln 3/4)
    assert entropy(np.diag([0.25, 0.75])) == pytest.approx(0.5623351446188083, abs=1e-15)


def test_entropy_extremes():
    assert entropy(np.eye(4) / 4) == pytest.approx(np.log(4), abs=1e-14)
    assert entropy(np.diag([1.0, 0.0, 0.0])) == 0.0


def test_spectral_decompose_kernel_mask():
    rho = spectral_decompose(np.diag([0.6, 0.4, 1e-14]))
    assert rho.kernel_dim == 1 and rho.rank == 2
    assert rho.eigenvalues[-1] == 0.0
    assert np.isclose(rho.eigenvalues.sum(), 1.0)


@pytest.mark.parametrize(
    "bad",
    [
        np.array([[0.5, 0.1], [0.2, 0.5]]),
        np.diag([0.7, 0.7]),
        np.diag([1.1, -0.1]),
    ],
)
def test_spectral_decompose_rejects(bad):
    with pytest.raises(NotAState):
        spectral_decompose(bad)


def test_kernel_lock_forces_smallest():
    rho = spectral_decompose(np.diag([0.5, 0.5 - 1e-9, 1e-9]), n_kernel=1)
    assert rho.kernel_dim == 1


@given(seeds, dims)
def test_log_and_sqrt_match_scipy(seed, dim):
    rng = np.random.default_rng(seed)
    rho = as_state(random_density(dim, rng))
    assert np.allclose(log_on_range(rho), sla.logm(rho.op), atol=1e-9)
    assert np.allclose(sqrt_state(rho), sla.sqrtm(rho.op), atol=1e-9)


def test_log_on_range_vanishes_on_kernel(rng):
    rho = as_state(random_density(4, rng, rank=2))
    k = rho.eigenvectors[:, rho.kernel_mask]
    assert np.max(np.abs(log_on_range(rho) @ k)) < 1e-12


@given(seeds, dims)
def test_scalar_product_symmetric_and_matches_trace(seed, dim):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    ref = 0.5 * np.trace(f.conj().T @ g + g.conj().T @ f).real
    assert real_scalar_product(f, g) == pytest.approx(ref, abs=1e-10)
    assert real_scalar_product(f, g) == pytest.approx(real_scalar_product(g, f), abs=1e-12)
    assert real_scalar_product(f, f) >= 0


@given(seeds, dims)
def test_covariance_definition(seed, dim):
    rng = np.random.default_rng(seed)
    rho = as_state(random_density(dim, rng))
    f, g = random_hermitian(dim, rng), random_hermitian(dim, rng)
    ref = 0.5 * np.trace(rho.op @ (centered(f, rho) @ centered(g, rho) + centered(g, rho) @ centered(f, rho))).real
    assert covariance(f, g, rho) == pytest.approx(ref, abs=1e-10)
    m = covariance_matrix([f, g], rho)
    assert m[0, 1] == pytest.approx(ref, abs=1e-10)
    assert np.all(np.linalg.eigvalsh(m) >= -1e-12)


def test_ordered_cholesky_drops_dependent_rows():
    a = np.array([1.0, 2.0, 0.0])
    b = np.array([0.0, 1.0, 1.0])
    vecs = np.stack([a, b, a + 2 * b, np.array([1.0, 0, 0])])
    gram = vecs @ vecs.T
    factor, kept = ordered_cholesky(gram)
    assert kept == [0, 1, 3]
    assert np.allclose(factor @ factor.T, gram[np.ix_(kept, kept)])


@given(seeds, dims)
def test_gram_determinant_matches_det(seed, dim):
    rng = np.random.default_rng(seed)
    rho = as_state(random_density(dim, rng))
    ops = [random_hermitian(dim, rng) for _ in range(2)]
    assert gram_determinant(ops, rho) == pytest.approx(np.linalg.det(covariance_matrix(ops, rho)), rel=1e-8, abs=1e-14)


def test_gram_determinant_zero_for_dependent(rng):
    rho = as_state(random_density(3, rng))
    h = random_hermitian(3, rng)
    assert gram_determinant([h, 2 * h + np.eye(3)], rho) == 0.0


def test_gibbs_state_and_trace_distance():
    h = np.diag([0.0, 1.0])
    g = gibbs_state(h, np.log(3))
    assert np.allclose(np.diag(g).real, [0.75, 0.25])
    assert trace_distance(g, np.diag([0.25, 0.75])) == pytest.approx(0.5)
