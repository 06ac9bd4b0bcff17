import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lstsq_dissipator
from seaqt.errors import SingularBasis
from seaqt.generator import entropy_production_rate
from seaqt.onsager import (
    affinities,
    conductivities,
    conductivities_determinant,
    custom_basis,
    default_basis,
    dissipative_rates,
    entropy_production_quadratic_forms,
    gell_mann,
    onsager_report,
)
from seaqt.operators import as_state, gibbs_state, random_density, random_hermitian

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gell_mann_orthonormal(n):
    g = gell_mann(n)
    assert len(g) == n * n - 1
    gram = np.array([[np.trace(a @ b).real for b in g] for a in g])
    assert np.allclose(gram, 2 * np.eye(len(g)))
    assert all(abs(np.trace(a)) < 1e-14 for a in g)


@given(seeds, st.integers(2, 4))
def test_affinities_reconstruct_log(seed, dim):
    rng = np.random.default_rng(seed)
    rho = as_state(random_density(dim, rng))
    basis = default_basis(rho)
    aff = affinities(rho, basis)
    lnr = -aff.f0 * np.eye(dim) - sum(f * x for f, x in zip(aff.f, basis.operators))
    w, u = np.linalg.eigh(rho.op)
    assert np.allclose(lnr, (u * np.log(w)) @ u.conj().T, atol=1e-9)


@given(seeds, st.integers(2, 4))
def test_conductivities_symmetric_psd_and_match_determinant(seed, dim):
    rng = np.random.default_rng(seed)
    rho = as_state(random_density(dim, rng))
    h = random_hermitian(dim, rng)
    cm = conductivities(rho, None, [h], 1.3)
    assert np.max(np.abs(cm.L - cm.L.T)) < 1e-12
    assert cm.min_eigenvalue > -1e-10
    assert np.allclose(cm.L, conductivities_determinant(rho, None, [h], 1.3), atol=1e-9)


@given(seeds, st.integers(2, 4))
def test_three_entropy_production_routes(seed, dim):
    rng = np.random.default_rng(seed)
    rho = as_state(random_density(dim, rng))
    h = random_hermitian(dim, rng)
    gram = entropy_production_rate(rho, [h], 0.6)
    qf = entropy_production_quadratic_forms(rho, None, [h], 0.6)
    _, oracle_rate = lstsq_dissipator(rho.op, [h], 0.6)
    assert qf.rate_fLf == pytest.approx(gram, rel=1e-7, abs=1e-12)
    assert qf.rate_Linv == pytest.approx(gram, rel=1e-7, abs=1e-12)
    assert gram == pytest.approx(oracle_rate, rel=1e-7, abs=1e-12)


def test_rates_consistency(rng):
    rho = as_state(random_density(3, rng))
    h = random_hermitian(3, rng)
    r = dissipative_rates(rho, None, [h])
    assert r.residual < 1e-10
    # the rate of a conserved observable in the basis span vanishes
    assert abs(sum(np.trace(h @ x).real / 2 * v for x, v in zip(default_basis(rho).operators, r.from_generator))) < 1e-10


def test_conductivities_singular_when_constraint_in_span(rng):
    rho = as_state(random_density(3, rng))
    h = random_hermitian(3, rng)
    qf = entropy_production_quadratic_forms(rho, None, [h])
    assert qf.singular and qf.rank == 7


def test_at_equilibrium_everything_vanishes():
    h = np.diag([0.0, 1.0, 2.0])
    rho = as_state(gibbs_state(h, 0.7))
    rep = onsager_report(rho, [h])
    assert rep.entropy_production_gram < 1e-14
    assert abs(rep.entropy_production_fLf) < 1e-12
    d = rep.to_dict()
    assert set(d["entropy_production"]) == {"gram_ratio", "affinity_form", "rate_form"}


def test_singular_custom_basis(rng):
    rho = as_state(random_density(2, rng))
    x = random_hermitian(2, rng)
    with pytest.raises(SingularBasis):
        affinities(rho, custom_basis(rho, [x, 2 * x]))


def test_rank_deficient_state_uses_support_basis(rng):
    rho = as_state(random_density(3, rng, rank=2))
    basis = default_basis(rho)
    assert len(basis) == 3
    rep = onsager_report(rho, [random_hermitian(3, rng)])
    assert rep.residuals["gram_vs_fLf"] < 1e-8
