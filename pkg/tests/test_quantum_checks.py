import numpy as np
import pytest

from definetti_kit import quantum_checks as qc
from definetti_kit.scalar_bounds import lemma1_bound


def test_statistics_rows_on_random_instances():
    rng = np.random.default_rng(5)
    deltas = [0.1, 0.3, 0.6]
    for _ in range(3):
        rho, U1, V1 = qc.random_lemma1_instance(2, 6, rng)
        rows = qc.quantum_lemma1_check(rho, 2, 2, 4, U1, V1, deltas)
        assert len(rows) == 3
        for r in rows:
            assert 0.0 <= r.probability <= 1.0 + 1e-12
            assert r.bound == pytest.approx(float(lemma1_bound(2, r.delta)))
            assert r.vacuous and r.holds
            assert r.to_dict()["holds"]


def test_probability_zero_when_tail_effect_vanishes():
    rng = np.random.default_rng(6)
    rho, _, _ = qc.random_lemma1_instance(2, 4, rng)
    rows = qc.quantum_lemma1_check(rho, 2, 2, 2, np.diag([0.0, 1.0]), np.zeros((2, 2)), [0.1])
    assert rows[0].probability == 0.0


def test_infeasible_head_constraint_counts_as_event():
    # lambda_min(U1) = 0.5 exceeds s/k + delta at s = 0, so gamma there is -inf
    rng = np.random.default_rng(6)
    rho, _, _ = qc.random_lemma1_instance(2, 4, rng)
    U1 = np.diag([0.5, 1.0])
    rows = qc.quantum_lemma1_check(rho, 2, 2, 2, U1, np.zeros((2, 2)), [0.1])
    from definetti_kit.symmetric import BinaryPovm, outcome_distribution
    dist = outcome_distribution(rho, 2, [BinaryPovm(U1)] * 2 + [BinaryPovm(np.zeros((2, 2)))] * 2)
    p_head_zero = sum(p for b, p in dist.items() if sum(b[:2]) == 0)
    assert rows[0].probability == pytest.approx(p_head_zero, abs=1e-14)


def test_identical_measurements_on_product_state_of_eigenvector():
    # a state in the kernel of U1 = V1 never clicks, so no event occurs
    E = np.diag([0.0, 1.0])
    rho = np.zeros((64, 64))
    rho[0, 0] = 1.0
    rows = qc.quantum_lemma1_check(rho, 2, 2, 4, E, E, [0.0, 0.2])
    assert all(r.probability == 0.0 for r in rows)


def test_support_restriction_row():
    rng = np.random.default_rng(7)
    rho, U1, V1 = qc.random_lemma1_instance(2, 6, rng)
    row = qc.support_restriction_check(rho, 2, 2, 4, U1, V1)
    assert 0.0 <= row.probability <= 1.0
    assert row.holds
