import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from definetti_kit.errors import DomainError, TruncationError
from definetti_kit.fock import (FockCutoff, coherent_overlap, coherent_state, energy_effect, hermite_functions,
                                lemma2_operators, quadratures, w1_diagonal, w1_quadrature_check,
                                window_compression)
from definetti_kit.linalg import check_operator_interval
from definetti_kit.scalar_bounds import regularized_upper_gamma


def test_hermite_functions_orthonormal():
    x, w = np.polynomial.hermite.hermgauss(120)
    # hermgauss weights include e^{-x^2}; undo it for psi_m psi_n
    psi = hermite_functions(60, x) * np.exp(0.5 * x * x)
    gram = (psi * w) @ psi.T
    assert np.max(np.abs(gram - np.eye(60))) < 1e-11


def _mp_psi(n, x):
    return mp.hermite(n, x) * mp.e ** (-x * x / 2) / mp.sqrt(2 ** n * mp.factorial(n) * mp.sqrt(mp.pi))


@pytest.mark.parametrize("m,n,a", [(0, 0, 1.0), (3, 5, 2.0), (10, 12, math.sqrt(8)), (7, 7, 0.4), (20, 2, 3.0)])
def test_window_compression_against_mpmath(m, n, a):
    mp.mp.dps = 25
    expect = float(mp.quad(lambda x: _mp_psi(m, x) * _mp_psi(n, x), [-a, 0, a]))
    assert window_compression(24, a)[m, n] == pytest.approx(expect, abs=1e-12)


def test_compression_is_nested_in_cutoff():
    small, big = window_compression(20, 2.5), window_compression(60, 2.5)
    assert np.max(np.abs(small - big[:20, :20])) < 1e-12


def test_parity_selection():
    w = window_compression(30, 1.7)
    i, j = np.indices(w.shape)
    assert np.max(np.abs(w[(i + j) % 2 == 1])) < 1e-13


@pytest.mark.parametrize("construction", ["compressed", "truncated"])
def test_measurement_pair_is_valid(construction):
    cut = FockCutoff(64, 16)
    U1, V1 = lemma2_operators(cut, construction)
    check_operator_interval(U1)
    check_operator_interval(V1)
    assert np.count_nonzero(np.diag(V1.entries)) == 64 - 8


def test_energy_effect_thresholds():
    cut = FockCutoff(8, 2)
    assert list(np.diag(energy_effect(cut).entries)) == [0, 1, 1, 1, 1, 1, 1, 1]
    assert list(np.diag(energy_effect(cut, "photon").entries)) == [0, 0, 1, 1, 1, 1, 1, 1]
    with pytest.raises(DomainError):
        energy_effect(cut, "other")


def test_quadrature_sum_is_number_operator_away_from_edge():
    X, Y = quadratures(FockCutoff(30, 1))
    s = X.entries @ X.entries + (Y.entries @ Y.entries).real
    assert np.allclose(np.diag(s)[:-1], 2 * np.arange(29) + 1)
    assert np.allclose(s - np.diag(np.diag(s)), 0)


def test_margin_enforced():
    with pytest.raises(DomainError):
        FockCutoff(10, 4)
    assert FockCutoff(10, 4, enforce_margin=False).doubled().n_cut == 20


def test_w1_table_matches_scalar_gamma():
    cut = FockCutoff(200, 50)
    q = w1_diagonal(cut)
    ref = np.array([regularized_upper_gamma(n, 50) for n in range(200)])
    assert np.max(np.abs(q - ref)) < 1e-13
    assert np.all(np.diff(q) >= 0) and q.max() <= 1.0


@pytest.mark.parametrize("n,n0", [(0, 3.0), (10, 11.0), (40, 30.0), (200, 201.0)])
def test_w1_phase_space_integral(n, n0):
    integral, q = w1_quadrature_check(n, n0)
    assert integral == pytest.approx(q, abs=1e-8)


def test_poisson_at_frozen_values():
    assert regularized_upper_gamma(10, 11) < 0.5830397501929855 + 1e-14
    assert regularized_upper_gamma(10, 10) == pytest.approx(0.5830397501929855, rel=1e-13)
    assert regularized_upper_gamma(200, 200) == pytest.approx(0.5187943096786845, rel=1e-12)


@given(st.complex_numbers(max_magnitude=3.0), st.complex_numbers(max_magnitude=3.0))
def test_coherent_overlap_matches_vectors(a, b):
    cut = FockCutoff(120, 1)
    va, vb = coherent_state(a, cut), coherent_state(b, cut)
    assert np.vdot(va, vb) == pytest.approx(coherent_overlap(a, b), abs=1e-9)


def test_coherent_photon_mean_and_truncation_guard():
    cut = FockCutoff(100, 1)
    v = coherent_state(2.0 + 1.0j, cut)
    assert float(np.sum(np.arange(100) * np.abs(v) ** 2)) == pytest.approx(5.0, rel=1e-9)
    with pytest.raises(TruncationError):
        coherent_state(6.0, FockCutoff(100, 1))
    with pytest.raises(TruncationError):
        coherent_state(math.sqrt(2.0), FockCutoff(8, 1))
