"""Closed-form bounds and the combinatorial estimates behind them.

Every probability-like bound is returned as a :class:`LogValue` and is never
clamped at one: at desk-scale parameters most of these bounds are vacuous and
callers are expected to report that (``LogValue.is_vacuous``).

Entropies are in nats throughout.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .logvalue import LogValue

C0 = 1.0 - 1.0 / math.sqrt(2.0)

# exact integer binomials are used while either the table bound or the
# smaller index keeps math.comb cheap; lgamma only beyond that
_EXACT_N = 60
_EXACT_SMALL_INDEX = 2000


@dataclass(frozen=True)
class BoundParams:
    """Parameter bundle for the closed-form bounds.

    ``k`` test positions, ``n`` remaining positions, statistical tolerance
    ``delta``, energy threshold ``n0``, subspace dimension ``d``, smoothness
    ``eps`` and the classical alphabet size ``dim_x``.
    """

    k: int
    n: int
    delta: float = 0.0
    n0: int = 1
    d: int = 1
    eps: float = 0.5
    dim_x: int = 2

    def __post_init__(self):
        for name in ("k", "n", "n0", "d", "dim_x"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta!r}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps!r}")


@dataclass(frozen=True)
class GammaBoundParams:
    n0: int
    c0: float = C0

    def __post_init__(self):
        if not isinstance(self.n0, int) or self.n0 < 1:
            raise DomainError(f"n0 must be a positive integer, got {self.n0!r}")


def _check_unit_interval(name, p):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")


def binary_entropy(p: float) -> float:
    """h(p) = -p ln p - (1-p) ln(1-p), with h(0) = h(1) = 0."""
    _check_unit_interval("p", p)
    p = float(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def entropy_quadratic_gap(alpha: float, beta: float) -> float:
    """2 h((alpha+beta)/2) - h(alpha) - h(beta), which dominates (alpha-beta)^2."""
    _check_unit_interval("alpha", alpha)
    _check_unit_interval("beta", beta)
    return (2.0 * binary_entropy((alpha + beta) / 2.0)
            - binary_entropy(alpha) - binary_entropy(beta))


@lru_cache(maxsize=1 << 16)
def log_binomial(N: int, K: int) -> LogValue:
    if N < 0 or K < 0:
        raise DomainError(f"binomial arguments must be non-negative, got ({N}, {K})")
    if K > N:
        raise DomainError(f"K={K} exceeds N={N}")
    small = min(K, N - K)
    if N <= _EXACT_N or small <= _EXACT_SMALL_INDEX:
        # math.log of an exact int is correctly rounded even for huge ints
        return LogValue(1, math.log(math.comb(N, K)))
    return LogValue(1, math.lgamma(N + 1) - math.lgamma(K + 1) - math.lgamma(N - K + 1))


class WRBounds(NamedTuple):
    """Binomial sandwich values; ``None`` where the form does not apply."""

    lower: LogValue | None
    upper: LogValue | None
    simple_lower: LogValue | None
    simple_upper: LogValue


def _integral_count(N: int, p) -> int:
    if isinstance(p, Rational):
        K = Fraction(p) * N
        if K.denominator != 1:
            raise DomainError(f"p*N = {K} is not an integer")
        return int(K)
    K = float(p) * N
    Ki = round(K)
    if abs(K - Ki) > 1e-9 * max(1, N):
        raise DomainError(f"p*N = {K!r} is not an integer")
    return int(Ki)


def wozencraft_reiffen_bounds(N: int, p) -> WRBounds:
    """Entropy bounds on C(N, pN).

    The two-sided form e^{Nh}/sqrt(8Ng) <= C(N,pN) <= e^{Nh}/sqrt(pi N g),
    g = p(1-p), needs 0 < p < 1 with pN integral; since pN is integral this is
    the window 1/N <= p <= 1-1/N. At p in {0, 1} only e^{Nh(p)} = 1 is offered.
    """
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    K = _integral_count(N, p)
    if not 0 <= K <= N:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    q = K / N
    log_e = N * binary_entropy(q)
    simple_upper = LogValue(1, log_e)
    if K in (0, N):
        return WRBounds(None, None, None, simple_upper)
    g = q * (1.0 - q)
    lower = LogValue(1, log_e - 0.5 * math.log(8.0 * N * g))
    upper = LogValue(1, log_e - 0.5 * math.log(math.pi * N * g))
    simple_lower = LogValue(1, log_e - 0.5 * math.log(2.0 * N))
    return WRBounds(lower, upper, simple_lower, simple_upper)


def _check_split(k, r, s):
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if not 0 <= r <= 2 * k:
        raise DomainError(f"r must lie in [0, 2k], got {r}")
    if not max(0, r - k) <= s <= min(r, k):
        raise DomainError(f"s={s} outside the support [{max(0, r - k)}, {min(r, k)}]")


def r_krs(k: int, r: int, s: int) -> float:
    """(1/k) ln[ C(2k, r) / (C(k, s) C(k, r-s)) ]."""
    _check_split(k, r, s)
    log_ratio = log_binomial(2 * k, r) / (log_binomial(k, s) * log_binomial(k, r - s))
    return log_ratio.log_magnitude / k


def r_krs_lower_bound(k: int, r: int, s: int) -> float:
    """Entropy lower bound on :func:`r_krs` obtained from the binomial sandwich."""
    _check_split(k, r, s)
    return (2.0 * binary_entropy(r / (2 * k)) - binary_entropy(s / k)
            - binary_entropy((r - s) / k) - math.log(4 * k) / (2 * k))


def lemma1_bound(k: int, delta: float) -> LogValue:
    """8 k^{3/2} exp(-k delta^2)."""
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    return LogValue(1, math.log(8.0) + 1.5 * math.log(k) - k * delta * delta)


def lemma5_bound(k: int, delta: float) -> LogValue:
    """2 k^{3/2} exp(-k delta^2), the single-sided statistics bound."""
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    return LogValue(1, math.log(2.0) + 1.5 * math.log(k) - k * delta * delta)


def lemma3_delta(k: int, n: int) -> float:
    """Tolerance k / (7(k+n)) used to derive the support-restriction bound."""
    return k / (7.0 * (k + n))


def lemma3_bound(k: int, n: int) -> LogValue:
    """8 k^{3/2} exp(-k^3 / (49 (k+n)^2)).

    The bound is stated for n >= 2k; smaller n is evaluated anyway with a
    warning.
    """
    if k < 1 or n < 1:
        raise DomainError(f"k and n must be positive, got ({k}, {n})")
    if n < 2 * k:
        warnings.warn(f"lemma3_bound evaluated outside its hypothesis n >= 2k (k={k}, n={n})",
                      stacklevel=2)
    # exponent as k * delta^2 with delta = k/(7(k+n)), kept in floats of moderate size
    frac = k / (k + n)
    return LogValue(1, math.log(8.0) + 1.5 * math.log(k) - k * frac * frac / 49.0)


def lemma2_bound(params: GammaBoundParams | int, delta: float) -> float:
    """4 delta + 4/(c0 sqrt(pi n0)) exp(-n0 c0^2)."""
    if not isinstance(params, GammaBoundParams):
        params = GammaBoundParams(int(params))
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    return 4.0 * delta + lemma2_offset(params)


def lemma2_offset(params: GammaBoundParams | int) -> float:
    if not isinstance(params, GammaBoundParams):
        params = GammaBoundParams(int(params))
    n0, c0 = params.n0, params.c0
    return 4.0 / (c0 * math.sqrt(math.pi * n0)) * math.exp(-n0 * c0 * c0)


def gaussian_tail_bound(n0: int, a: float) -> float:
    """Upper bound e^{-(sqrt(n0)-a)^2} / (sqrt(pi) (sqrt(n0)-a)) on the smeared tail F(a)."""
    if n0 < 1:
        raise DomainError(f"n0 must be positive, got {n0}")
    gap = math.sqrt(n0) - a
    if a < 0 or gap <= 0:
        raise DomainError(f"a must lie in [0, sqrt(n0)), got {a}")
    return math.exp(-gap * gap - math.log(math.sqrt(math.pi) * gap))


def gaussian_tail(n0: int, a: float) -> float:
    """F(a) = pi^{-1/2} int_{|z| >= sqrt(n0)} exp(-(z-a)^2) dz, via erfc."""
    r = math.sqrt(n0)
    return 0.5 * (math.erfc(r - a) + math.erfc(r + a))


def definetti_overlap_bound(k: int, n: int, d: float, total: str = "2k+n") -> LogValue:
    """Error term k^d exp(-k(k+1)/D) with D = 2k+n or 4k+n.

    The caller forms ``1 - error``; ``d`` may be non-integral so that the
    scaling regime d = m^{3/2} can be evaluated directly.
    """
    if k < 1 or n < 1 or d < 1:
        raise DomainError(f"k, n, d must be >= 1, got ({k}, {n}, {d})")
    mode = total.replace(" ", "").lower()
    if mode in ("2k+n", "2kn"):
        denom = 2 * k + n
    elif mode in ("4k+n", "4kn"):
        denom = 4 * k + n
    else:
        raise DomainError(f"total must be '2k+n' or '4k+n', got {total!r}")
    return LogValue(1, d * math.log(k) - k * (k + 1) / denom)


class BinomialRatio(NamedTuple):
    exact: LogValue
    middle: LogValue
    exp_bound: LogValue


def binomial_ratio_bound(k: int, n: int) -> BinomialRatio:
    """C(k+n,k+1)/C(2k+n,k+1) <= ((k+n-1)/(2k+n))^k < exp(-k(k+1)/(2k+n))."""
    if k < 1 or n < 1:
        raise DomainError(f"k and n must be positive, got ({k}, {n})")
    exact = log_binomial(k + n, k + 1) / log_binomial(2 * k + n, k + 1)
    middle = LogValue(1, k * math.log1p(-(k + 1) / (2 * k + n)))
    exp_bound = LogValue(1, -k * (k + 1) / (2 * k + n))
    # the first link is tight at k = 1; compare it in integers
    assert binomial_ratio_chain_exact(k, n) and middle < exp_bound, (k, n, exact, middle, exp_bound)
    return BinomialRatio(exact, middle, exp_bound)


def binomial_ratio_chain_exact(k: int, n: int) -> bool:
    """Integer-arithmetic check of the first link of the ratio chain."""
    lhs = math.comb(k + n, k + 1) * (2 * k + n) ** k
    rhs = (k + n - 1) ** k * math.comb(2 * k + n, k + 1)
    return lhs <= rhs


def theorem2_delta(k: int, n: int, eps: float, dim_x: int) -> float:
    """5 (ln dim_x + 1) sqrt(2 ln(4/eps)/(k+n) + h(k/(k+n)))."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if k < 0 or n < 1:
        raise DomainError(f"need k >= 0 and n >= 1, got ({k}, {n})")
    if dim_x < 2:
        raise DomainError(f"dim_x must be at least 2, got {dim_x}")
    total = k + n
    inner = 2.0 * math.log(4.0 / eps) / total + binary_entropy(k / total)
    return 5.0 * (math.log(dim_x) + 1.0) * math.sqrt(inner)


def log_regularized_upper_gamma(n: int, x: float) -> LogValue:
    """log Q(n+1, x) with Q(n+1, x) = e^{-x} sum_{j<=n} x^j / j!."""
    if n < 0 or x < 0:
        raise DomainError(f"need n >= 0 and x >= 0, got ({n}, {x})")
    if x == 0:
        return LogValue.one()
    lx = math.log(x)
    terms = [LogValue(1, j * lx - math.lgamma(j + 1) - x) for j in range(n + 1)]
    return LogValue.sum(terms)


def log_regularized_upper_gamma_table(n_max: int, x: float):
    """log Q(n+1, x) for n = 0..n_max-1, by one running log-sum-exp over the series."""
    if n_max < 0 or x < 0:
        raise DomainError(f"need n_max >= 0 and x >= 0, got ({n_max}, {x})")
    if x == 0:
        return np.zeros(n_max)
    j = np.arange(n_max)
    terms = j * math.log(x) - np.array([math.lgamma(i + 1) for i in j]) - x
    return np.logaddexp.accumulate(terms)


def regularized_upper_gamma(n: int, x: float) -> float:
    return float(log_regularized_upper_gamma(n, x))
