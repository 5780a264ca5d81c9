import math
import warnings
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from definetti_kit import scalar_bounds as sb
from definetti_kit.errors import DomainError


# values frozen from mpmath evaluations of the closed forms at 40 digits
def test_statistics_bound_value():
    # 8 * 1e6 * e^{-25}
    v = sb.lemma1_bound(10_000, 0.05)
    assert float(v) == pytest.approx(1.111035509197121647e-4, rel=1e-12)
    assert float(sb.lemma5_bound(10_000, 0.05)) == pytest.approx(1.111035509197121647e-4 / 4, rel=1e-12)


def test_entropy_delta_value():
    # eps = 4/e^2 makes ln(4/eps) = 2, and k = 0 removes the entropy term
    v = sb.theorem2_delta(0, 10 ** 6, 4 / math.e ** 2, 2)
    assert v == pytest.approx(0.01693147180559945309, rel=1e-12)


def test_energy_cut_bound_values():
    assert sb.lemma2_bound(16, 0.0) == pytest.approx(0.48821433052439256993, rel=1e-13)
    assert sb.lemma2_bound(16, 0.1) == pytest.approx(0.4 + 0.48821433052439256993, rel=1e-13)
    assert sb.lemma2_offset(sb.GammaBoundParams(16)) == sb.lemma2_bound(16, 0.0)


def test_definetti_error_values():
    assert float(sb.definetti_overlap_bound(1, 2, 2, "4k+n")) == pytest.approx(0.71653131057378925043, rel=1e-14)
    assert float(sb.definetti_overlap_bound(1, 2, 2, "2k+n")) == pytest.approx(math.exp(-0.5), rel=1e-14)
    # scaling regime d = m^{3/2} with non-integral d, 3 m^{1.5} ln m dominates d ln k at k = m^3
    m = 10_000.0
    v = sb.definetti_overlap_bound(int(m ** 3), int(m ** 4), m ** 1.5, "2k+n")
    assert v.log() == pytest.approx(3 * m ** 1.5 * math.log(m) - m ** 3 * (m ** 3 + 1) / (2 * m ** 3 + m ** 4), rel=1e-12)
    with pytest.raises(DomainError):
        sb.definetti_overlap_bound(1, 2, 2, "3k+n")


def test_support_restriction_exponent():
    m = 4900
    k = m ** 3
    v = sb.lemma3_bound(k, (m - 2) * k)
    expo = v.log() - math.log(8) - 1.5 * math.log(k)
    assert expo == pytest.approx(-100.04082882472525959, rel=1e-12)
    assert v < 1e-20


def test_support_restriction_warns_outside_hypothesis():
    with pytest.warns(UserWarning):
        sb.lemma3_bound(10, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sb.lemma3_bound(10, 20)


def test_log_binomial_against_mpmath():
    mp.mp.dps = 30
    for N, K in ((10 ** 6, 3 * 10 ** 5), (5000, 2500), (60, 30), (10 ** 7, 12), (123457, 61728)):
        expect = float(mp.log(mp.binomial(N, K)))
        assert sb.log_binomial(N, K).log() == pytest.approx(expect, rel=1e-13)


def test_log_binomial_exact_range_is_exact():
    for N in range(0, 61):
        for K in range(N + 1):
            assert sb.log_binomial(N, K).log() == math.log(math.comb(N, K))


def test_wozencraft_reiffen_edges_and_domain():
    wr = sb.wozencraft_reiffen_bounds(10, 0)
    assert wr.lower is None and wr.upper is None and wr.simple_lower is None
    assert wr.simple_upper == 1
    assert sb.wozencraft_reiffen_bounds(10, 0.3).upper.log() > math.log(120)
    with pytest.raises(DomainError):
        sb.wozencraft_reiffen_bounds(10, Fraction(1, 3))
    with pytest.raises(DomainError):
        sb.wozencraft_reiffen_bounds(10, 0.25)


@given(st.integers(1, 400), st.data())
def test_wozencraft_reiffen_sandwich_large_n(N, data):
    K = data.draw(st.integers(1, max(1, N - 1)))
    if not 0 < K < N:
        return
    wr = sb.wozencraft_reiffen_bounds(N, Fraction(K, N))
    exact = math.log(math.comb(N, K))
    assert wr.lower.log() <= exact <= wr.upper.log()


@given(st.floats(0, 1), st.floats(0, 1))
def test_entropy_gap_dominates_square(a, b):
    assert sb.entropy_quadratic_gap(a, b) >= (a - b) ** 2 / 2 - 1e-15


@given(st.floats(0, 1))
def test_binary_entropy_symmetry(p):
    assert sb.binary_entropy(p) == pytest.approx(sb.binary_entropy(1 - p), abs=1e-15)
    assert 0 <= sb.binary_entropy(p) <= math.log(2) + 1e-15


@given(st.integers(1, 30), st.data())
def test_split_rate_lower_bound(k, data):
    r = data.draw(st.integers(0, 2 * k))
    s = data.draw(st.integers(max(0, r - k), min(r, k)))
    assert sb.r_krs_lower_bound(k, r, s) <= sb.r_krs(k, r, s) + 1e-12


def test_split_rate_domain():
    with pytest.raises(DomainError):
        sb.r_krs(3, 2, 3)


def test_gaussian_tail_under_its_bound():
    for n0 in (4, 16, 64, 100):
        for frac in (0.0, 0.3, 0.5, 0.7, 0.9):
            a = frac * math.sqrt(n0)
            assert sb.gaussian_tail(n0, a) <= sb.gaussian_tail_bound(n0, a)
    with pytest.raises(DomainError):
        sb.gaussian_tail_bound(16, 4.0)


def test_ratio_chain_tight_at_k_one():
    r = sb.binomial_ratio_bound(1, 5)
    assert float(r.exact) == pytest.approx(float(r.middle), rel=1e-14)


@given(st.integers(0, 300), st.floats(0, 300))
def test_incomplete_gamma_against_mpmath(n, x):
    mp.mp.dps = 30
    expect = float(mp.gammainc(n + 1, x, mp.inf, regularized=True))
    assert sb.regularized_upper_gamma(n, x) == pytest.approx(expect, rel=1e-11, abs=1e-300)


def test_incomplete_gamma_table_matches_scalar():
    import numpy as np

    t = np.exp(sb.log_regularized_upper_gamma_table(300, 123.5))
    ref = np.array([sb.regularized_upper_gamma(n, 123.5) for n in range(300)])
    assert np.max(np.abs(t - ref)) < 1e-14


def test_param_bundles_validate():
    with pytest.raises(DomainError):
        sb.BoundParams(k=0, n=1)
    with pytest.raises(DomainError):
        sb.BoundParams(k=1, n=1, eps=1.0)
    with pytest.raises(DomainError):
        sb.GammaBoundParams(0)
