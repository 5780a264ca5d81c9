import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from definetti_kit import symmetric as sy
from definetti_kit.errors import DomainError, PreconditionError, ResourceGuardError
from definetti_kit.linalg import haar_unitary, is_projector, random_contraction

seeds = st.integers(0, 2 ** 32 - 1)
shapes = st.sampled_from([(2, 1), (2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (4, 2)])


@given(shapes)
def test_dicke_projector_matches_permutation_average(shape):
    d, n = shape
    P = sy.sym_projector(d, n).entries
    assert np.max(np.abs(P - sy.sym_projector_by_average(d, n))) < 1e-12
    assert round(np.trace(P).real) == sy.dim_sym(d, n)


@given(st.permutations(range(4)), st.permutations(range(4)))
def test_permutation_operators_compose(p1, p2):
    A, B = sy.permutation_operator(2, 4, p1), sy.permutation_operator(2, 4, p2)
    assert np.allclose(sy.permutation_operator(2, 4, sy.compose(p1, p2)), A @ B)
    assert np.allclose(sy.permutation_operator(2, 4, sy.inverse(p1)), A.T)


@given(seeds, st.permutations(range(3)))
def test_permute_operator_is_conjugation(seed, pi):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((27, 27))
    P = sy.permutation_operator(3, 3, pi)
    assert np.allclose(sy.permute_operator(A, 3, 3, pi), P @ A @ P.T)


def test_permutation_moves_subsystems():
    a, b, c = np.eye(2)[0], np.eye(2)[1], np.array([1, 1j]) / np.sqrt(2)
    moved = sy.permute_vector(sy.product_vector([a, b, c]), 2, 3, (2, 0, 1))
    assert np.allclose(moved, sy.product_vector([b, c, a]))
    with pytest.raises(DomainError):
        sy.permute_vector(np.zeros(8), 2, 3, (0, 0, 1))


@given(seeds, st.sampled_from([(3, 1, 1), (3, 1, 2), (3, 2, 2), (2, 1, 3), (4, 1, 1)]), st.integers(1, 2))
def test_restricted_projector_two_routes(seed, case, h):
    d, k, n = case
    rng = np.random.default_rng(seed)
    sub = sy.SubspaceBasis(d, haar_unitary(d, rng)[:, :min(h, d - 1)])
    P = sy.restricted_projector(sub, k, n)
    assert is_projector(P)
    assert np.max(np.abs(P.entries - sy.restricted_projector_by_sum(sub, k, n))) < 1e-10


@given(seeds, st.sampled_from([(2, 1, 2), (2, 2, 2), (3, 1, 2), (3, 2, 1), (2, 0, 3)]))
def test_almost_iid_space(seed, case):
    d, k, n = case
    rng = np.random.default_rng(seed)
    nu, psi = sy.random_unit_vectors(d, 2, rng)
    P = sy.almost_iid_projector(nu, k, n).entries
    assert round(np.trace(P).real) == sy.almost_iid_dim(d, k, n)
    iid = sy.product_vector([nu] * (k + n))
    assert np.linalg.norm(P @ iid - iid) < 1e-10
    # symmetrized nu^{(x) n} (x) psi^{(x) k} lies in the space
    v = sy.project_symmetric(sy.product_vector([nu] * n + [psi] * k), d, k + n)
    assert np.linalg.norm(P @ v - v) < 1e-10
    # and it is inside the symmetric subspace
    S = sy.sym_projector(d, k + n).entries
    assert np.max(np.abs(S @ P - P)) < 1e-10


@given(seeds)
def test_partial_trace_of_products(seed):
    rng = np.random.default_rng(seed)
    rhos = [sy.random_density(2, rng) for _ in range(3)]
    full = np.kron(np.kron(rhos[0], rhos[1]), rhos[2])
    assert np.allclose(sy.partial_trace(full, 2, 3, [0, 2]), np.kron(rhos[0], rhos[2]))
    assert np.allclose(sy.partial_trace(full, 2, 3, [1]), rhos[1])
    assert np.allclose(sy.partial_trace_general(np.kron(rhos[0], sy.random_density(3, rng)), [2, 3], [0]), rhos[0])


@given(seeds)
def test_fidelity_of_pure_states(seed):
    rng = np.random.default_rng(seed)
    a, b = sy.random_unit_vectors(3, 2, rng)
    F = sy.fidelity(np.outer(a, a.conj()), np.outer(b, b.conj()))
    assert F == pytest.approx(sy.pure_fidelity(a, b), abs=1e-7)


def test_entropy_values():
    assert sy.von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4))
    assert sy.von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0


@given(seeds, st.integers(1, 3))
def test_outcome_distribution_matches_kron(seed, m):
    rng = np.random.default_rng(seed)
    rho = sy.random_density(2 ** m, rng)
    povms = [sy.BinaryPovm(random_contraction(2, rng)) for _ in range(m)]
    dist = sy.outcome_distribution(rho, 2, povms)
    for bits in itertools.product((0, 1), repeat=m):
        E = np.ones((1, 1))
        for p, b in zip(povms, bits):
            E = np.kron(E, p.elements()[b])
        assert dist[bits] == pytest.approx(np.trace(E @ rho).real, abs=1e-12)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_purification_small_case():
    rng = np.random.default_rng(3)
    sub = sy.SubspaceBasis.coordinate(3, 2)
    R = sy.restricted_basis(sub, 1, 1)
    g = R @ (rng.standard_normal((R.shape[1], 4)) + 1j * rng.standard_normal((R.shape[1], 4)))
    rho = sy.symmetrize_operator(g @ g.conj().T, 3, 2)
    rho /= np.trace(rho).real
    phi = sy.purify_symmetric(rho, 3, 2, sub, k_support=1)
    res = sy.purification_checks(phi, rho, 3, 2, sub, k_support=1)
    assert max(res.values()) < 1e-10


def test_purification_preconditions():
    rho = np.diag([1.0, 0, 0, 0]).astype(complex)
    rho_asym = np.zeros((4, 4))
    rho_asym[1, 1] = 1.0
    with pytest.raises(PreconditionError):
        sy.purify_symmetric(rho_asym, 2, 2)
    with pytest.raises(PreconditionError):
        sy.purify_symmetric(np.diag([0, 0, 0, 1.0]), 2, 2, sy.SubspaceBasis.coordinate(2, 1), k_support=1)
    assert sy.purify_symmetric(rho, 2, 2).parts == 2


def test_conditional_marginal_on_product():
    rng = np.random.default_rng(4)
    a, b = sy.random_density(2, rng), sy.random_density(2, rng)
    E = random_contraction(2, rng)
    p, red = sy.conditional_marginal(np.kron(a, b), 2, 2, {0: (sy.BinaryPovm(E), 1)}, 1)
    assert p == pytest.approx(np.trace(E @ a).real)
    assert np.allclose(red, b)


def test_guards_and_validation():
    with pytest.raises(ResourceGuardError):
        sy.check_size(2, 13)
    with pytest.raises(ResourceGuardError):
        sy.symmetrize_operator(np.eye(2 ** 8), 2, 8)
    with pytest.raises(DomainError):
        sy.SubspaceBasis(3, np.ones((3, 2)))
    with pytest.raises(DomainError):
        sy.MultipartiteState(2, 2, np.ones(4))
    with pytest.raises(DomainError):
        sy.check_density(np.diag([0.5, 0.6]))


def test_complete_basis_keeps_columns():
    rng = np.random.default_rng(5)
    c = haar_unitary(5, rng)[:, :2]
    U = sy.complete_basis(c)
    assert np.allclose(U[:, :2], c)
    assert np.allclose(U.conj().T @ U, np.eye(5), atol=1e-12)
