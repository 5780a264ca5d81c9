import math

import numpy as np
import pytest

from definetti_kit import qkd_budget as qb
from definetti_kit.errors import DomainError, PreconditionError
from definetti_kit.scalar_bounds import binary_entropy, theorem2_delta


def test_block_sizes_and_window_at_twenty():
    r = qb.compose_budget(20, 60, 0.01, 2)
    assert (r.N, r.k, r.d) == (160000, 8000, 89)
    assert r.window == (60, 89)
    # 12 ln 140 = 59.2997...
    assert qb.window_lower(20) == math.ceil(59.29970907131165)
    assert r.blocks == {"tested": 8000, "remaining": 152000, "inside_subspace": 144000,
                        "purified_inside": 136000, "almost_iid": 120000, "iid_factors": 88000}
    assert (r.mu, r.mu_prime) == (0.25, 0.2)
    f = r.feasibility_flags
    assert f["chain_valid"] and f["lemma3_vacuous"]
    assert not f["window_forms_agree"] and qb.lemma3_window_lower(8000, 144000) == 59
    assert not f["d_covers_doubled_subspace"]
    assert any("900 exceeds" in s for s in r.notes)


def test_tiny_block_is_infeasible():
    r = qb.compose_budget(2, 1, 0.01, 2)
    f = r.feasibility_flags
    assert not f["window_nonempty"] and not f["definetti_defined"] and not f["chain_valid"]
    assert r.definetti_error is None and r.theorem2_delta is None and r.total_failure is None


def test_large_block_failure_is_small():
    r = qb.compose_budget(4900, qb.window_lower(4900), 0.01, 2)
    assert float(r.lemma3_failure) == pytest.approx(1.15e-26, rel=0.01)
    assert r.feasibility_flags["chain_valid"]
    assert not r.feasibility_flags["lemma3_vacuous"]


def test_terms_are_never_clamped():
    r = qb.compose_budget(20, 60, 0.01, 2)
    assert float(r.lemma3_failure) > 1.0
    d = r.to_dict()
    assert d["lemma3_failure"]["log_magnitude"] > 0


def test_envelope_variant_uses_dimension_condition():
    r = qb.compose_budget_with_envelope(20, 80, 0.01, 2, gamma_slope=4.0, gamma_offset=0.0)
    assert r.feasibility_flags["chain_valid"]
    assert r.gamma_envelope == (4.0, 0.0)
    bad = qb.compose_budget_with_envelope(20, 80, 0.01, 2, gamma_slope=4.0, gamma_offset=0.5)
    assert not bad.feasibility_flags["lemma3_proof_inequality"]
    with pytest.raises(DomainError):
        qb.compose_budget_with_envelope(20, 80, 0.01, 2, -1.0, 0.0)


def test_validation():
    for args in ((1, 5, 0.1, 2), (20, 0, 0.1, 2), (20, 5, 1.0, 2), (20, 5, 0.1, 1)):
        with pytest.raises(DomainError):
            qb.compose_budget(*args)
    with pytest.raises(DomainError):
        qb.find_min_m(1.0, 0.01, 2)


def test_search_agrees_with_linear_scan():
    res = qb.find_min_m(0.5, 0.01, 2, workers=1)
    assert res.found
    first = next(m for m in range(2, 4000) if qb._qualifies(m, 0.5, 0.01, 2)[0])
    assert res.m_star == first == 1785
    assert res.report.m == first


def test_low_energy_dimension():
    assert [qb.low_energy_dim(n) for n in (1, 2, 3, 4, 5)] == [1, 1, 2, 2, 3]
    assert qb.low_energy_dim(0) == 0


def test_rate_for_uniform_key_uncorrelated_with_eve():
    rho_b = np.diag([0.7, 0.3])
    sigma = np.kron(np.eye(2) / 2, rho_b)
    assert qb.conditional_entropy(sigma, 2) == pytest.approx(math.log(2), abs=1e-12)
    rate = qb.min_entropy_rate(sigma, 10, 10 ** 6, 0.01, 2)
    assert rate == pytest.approx(math.log(2) - theorem2_delta(10, 10 ** 6, 0.01, 2), abs=1e-12)


def test_rate_for_key_known_to_eve():
    sigma = np.diag([0.5, 0.0, 0.0, 0.5])
    assert qb.conditional_entropy(sigma, 2) == pytest.approx(0.0, abs=1e-12)


def test_cq_state_with_overlapping_conditionals():
    theta = 0.4
    psi0 = np.array([1.0, 0.0])
    psi1 = np.array([math.cos(theta), math.sin(theta)])
    sigma = 0.5 * (np.kron(np.diag([1.0, 0.0]), np.outer(psi0, psi0))
                   + np.kron(np.diag([0.0, 1.0]), np.outer(psi1, psi1)))
    # rho_B has eigenvalues (1 +- cos theta)/2, and S(XB) = ln 2
    expect = math.log(2) - binary_entropy((1 + math.cos(theta)) / 2)
    assert qb.conditional_entropy(sigma, 2) == pytest.approx(expect, abs=1e-12)


def test_non_classical_register_rejected():
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    sigma = np.kron(np.outer(plus, plus), np.eye(2) / 2)
    with pytest.raises(PreconditionError, match="block"):
        qb.conditional_entropy(sigma, 2)
    with pytest.raises(DomainError):
        qb.conditional_entropy(np.eye(6) / 6, 4)
