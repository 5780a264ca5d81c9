"""Exact oracles for permutation-invariant binary statistics.

A permutation-invariant distribution on {0,1}^total is a mixture of type
classes (uniform over strings with a fixed number of ones), so every quantity
here reduces to a finite hypergeometric sum over the number ``s`` of ones in
the observed block. Sums are exact enumerations carried out in log space.

The relative frequency of a block is its number of ones divided by the block
length.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError
from .logvalue import LogValue
from .scalar_bounds import lemma5_bound, log_binomial


@dataclass(frozen=True)
class TypeClassDistribution:
    """Uniform distribution over bit strings of length ``total`` with ``ones`` ones."""

    total: int
    ones: int

    def __post_init__(self):
        if not isinstance(self.total, int) or self.total < 1:
            raise DomainError(f"total must be a positive integer, got {self.total!r}")
        if not 0 <= self.ones <= self.total:
            raise DomainError(f"ones must lie in [0, {self.total}], got {self.ones!r}")

    def support(self, k: int) -> range:
        """Values of s (ones among the first k slots) with nonzero weight."""
        self._check_k(k)
        n = self.total - k
        return range(max(0, self.ones - n), min(self.ones, k) + 1)

    def _check_k(self, k):
        if not 0 <= k <= self.total:
            raise DomainError(f"k must lie in [0, {self.total}], got {k}")


@dataclass(frozen=True)
class SplitStatistics:
    """Observed block of size k with s ones, next to an unobserved block of size n."""

    k: int
    n: int
    s: int
    r: int

    @property
    def frequency(self) -> Fraction:
        return Fraction(self.s, self.k)

    @property
    def conditional(self) -> Fraction:
        """Probability that one given unobserved slot holds a 1, given the observation."""
        return Fraction(self.r - self.s, self.n)

    @property
    def deviation(self) -> Fraction:
        return abs(self.conditional - self.frequency)


def _exact_threshold(delta) -> Fraction:
    """Threshold as an exact rational.

    Floats are read through their shortest repr, so ``0.05`` means 1/20 and
    ties such as |p - f| = 0.05 are decided exactly.
    """
    if isinstance(delta, Fraction):
        return delta
    if isinstance(delta, int):
        return Fraction(delta)
    return Fraction(repr(float(delta)))


def hypergeometric_weight(dist: TypeClassDistribution, k: int, s: int) -> LogValue:
    """C(k,s) C(n,r-s) / C(k+n,r): probability of s ones among the first k slots."""
    dist._check_k(k)
    n = dist.total - k
    r = dist.ones
    if not (0 <= s <= k and 0 <= r - s <= n):
        return LogValue.zero()
    return log_binomial(k, s) * log_binomial(n, r - s) / log_binomial(dist.total, r)


def split_statistics(dist: TypeClassDistribution, k: int) -> list[tuple[SplitStatistics, LogValue]]:
    dist._check_k(k)
    n = dist.total - k
    return [(SplitStatistics(k, n, s, dist.ones), hypergeometric_weight(dist, k, s))
            for s in dist.support(k)]


def exact_moment(k: int, r: int) -> float:
    """E[exp(k (f' - f)^2)] for two blocks of size k inside a type class (2k, r).

    f and f' are the frequencies of the first and second block.
    """
    return float(log_exact_moment(k, r))


def log_exact_moment(k: int, r: int) -> LogValue:
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if not 0 <= r <= 2 * k:
        raise DomainError(f"r must lie in [0, 2k], got {r}")
    dist = TypeClassDistribution(2 * k, r)
    terms = []
    for s in dist.support(k):
        diff = (2 * s - r) / k
        terms.append(hypergeometric_weight(dist, k, s) * LogValue(1, k * diff * diff))
    return LogValue.sum(terms)


def moment_envelope(k: int) -> float:
    """The claimed envelope 2 k^{3/2} for :func:`exact_moment`."""
    return 2.0 * k ** 1.5


def moment_envelope_safe(k: int) -> float:
    """(k+1) 2 sqrt(k): the envelope implied by counting the k+1 summands."""
    return 2.0 * (k + 1) * math.sqrt(k)


def _tail_terms(dist, k, delta):
    thr = _exact_threshold(delta)
    for stats, w in split_statistics(dist, k):
        if stats.deviation >= thr:
            yield stats, w


def conditional_tail(dist: TypeClassDistribution, k: int, delta) -> float:
    """Pr[|p - f| >= delta] with f the observed frequency and p the conditional probability.

    The statistics bound this is compared with assumes n = total - k >= k;
    smaller n is evaluated with a warning.
    """
    return float(log_conditional_tail(dist, k, delta))


def log_conditional_tail(dist: TypeClassDistribution, k: int, delta) -> LogValue:
    if not 1 <= k < dist.total:
        raise DomainError(f"k must lie in [1, {dist.total - 1}], got {k}")
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    if dist.total - k < k:
        warnings.warn(f"tail evaluated with n={dist.total - k} < k={k}", stacklevel=3)
    return LogValue.sum(w for _, w in _tail_terms(dist, k, delta))


def conditional_tail_grid(dist: TypeClassDistribution, k: int, deltas: Sequence) -> list[LogValue]:
    """:func:`log_conditional_tail` at every threshold, sharing the split weights."""
    if not 1 <= k < dist.total:
        raise DomainError(f"k must lie in [1, {dist.total - 1}], got {k}")
    thresholds = [_exact_threshold(d) for d in deltas]
    if any(t < 0 for t in thresholds):
        raise DomainError("thresholds must be non-negative")
    n, r = dist.total - k, dist.ones
    # |p - f| = |k(r-s) - n s| / (n k); compare numerators against t * n k exactly
    split = sorted(((abs(k * (r - s) - n * s), hypergeometric_weight(dist, k, s).log_magnitude)
                    for s in dist.support(k)), reverse=True)
    devs = [dev for dev, _ in split]
    # running log-sum-exp over deviations in decreasing order
    cum = np.logaddexp.accumulate(np.array([lw for _, lw in split]))
    out = []
    for t in thresholds:
        num, den = t.numerator * n * k, t.denominator
        count = 0
        while count < len(devs) and devs[count] * den >= num:
            count += 1
        out.append(LogValue.zero() if count == 0 else LogValue(1, float(cum[count - 1])))
    return out


def markov_moment(dist: TypeClassDistribution, k: int) -> LogValue:
    """E[exp(k (p - f)^2)] computed directly from the split statistics."""
    terms = []
    for stats, w in split_statistics(dist, k):
        dev = float(stats.deviation)
        terms.append(w * LogValue(1, k * dev * dev))
    return LogValue.sum(terms)


def mixed_exact_moment(dist: TypeClassDistribution, k: int) -> LogValue:
    """Average of :func:`exact_moment` over the type of the first 2k slots.

    This dominates :func:`markov_moment` by convexity; needs total >= 2k.
    """
    if dist.total < 2 * k:
        raise DomainError(f"need total >= 2k, got total={dist.total}, k={k}")
    terms = []
    for r2 in dist.support(2 * k):
        terms.append(hypergeometric_weight(dist, 2 * k, r2) * log_exact_moment(k, r2))
    return LogValue.sum(terms)


@dataclass(frozen=True)
class MarkovChainCheck:
    tail: LogValue
    direct_markov: LogValue
    moment_markov: LogValue | None
    bound: LogValue

    @property
    def holds(self) -> bool:
        ok = self.tail <= self.direct_markov * (1 + 1e-12)
        if self.moment_markov is not None:
            ok = ok and self.direct_markov <= self.moment_markov * (1 + 1e-12)
        return ok


def markov_chain_check(dist: TypeClassDistribution, k: int, delta) -> MarkovChainCheck:
    """Each link of tail <= E[e^{k(p-f)^2}] e^{-k d^2} <= E[e^{k(f'-f)^2}] e^{-k d^2}."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tail = log_conditional_tail(dist, k, delta)
    damp = LogValue(1, -k * float(delta) ** 2)
    direct = markov_moment(dist, k) * damp
    moment = mixed_exact_moment(dist, k) * damp if dist.total >= 2 * k else None
    return MarkovChainCheck(tail, direct, moment, lemma5_bound(k, float(delta)))


def _validate_weights(weights: Mapping[int, float], total: int):
    for r, w in weights.items():
        if not 0 <= r <= total:
            raise DomainError(f"ones-count {r} outside [0, {total}]")
        if w < 0:
            raise DomainError(f"negative mixture weight {w} at ones={r}")
    s = math.fsum(weights.values())
    if abs(s - 1.0) > 1e-9:
        raise DomainError(f"mixture weights sum to {s}, not 1")


def mixture_tail(weights: Mapping[int, float], total: int, k: int, delta) -> float:
    """Tail probability for the permutation-invariant mixture sum_r w_r TypeClass(total, r)."""
    _validate_weights(weights, total)
    terms = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for r in sorted(weights):
            w = weights[r]
            if w == 0:
                continue
            terms.append(LogValue.from_float(w) * log_conditional_tail(TypeClassDistribution(total, r), k, delta))
    if total - k < k:
        warnings.warn(f"tail evaluated with n={total - k} < k={k}", stacklevel=2)
    return float(LogValue.sum(terms))


def binomial_mixture_weights(total: int, p: float) -> dict[int, float]:
    """Type weights of the i.i.d. Bernoulli(p) distribution."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        hit = total if p == 1.0 else 0
        return {r: float(r == hit) for r in range(total + 1)}
    lp, lq = math.log(p), math.log1p(-p)
    return {r: float(log_binomial(total, r) * LogValue(1, r * lp + (total - r) * lq))
            for r in range(total + 1)}


def frequency(bits: Sequence[int]) -> Fraction:
    if len(bits) == 0:
        raise DomainError("frequency of an empty block")
    return Fraction(sum(int(b) for b in bits), len(bits))


def frequency_split_identity(x: Sequence[int], k: int) -> tuple[Fraction, Fraction, Fraction]:
    """Tail frequency and the frequencies of its two halves; f = (f_left + f_right)/2."""
    bits = [int(b) for b in x]
    if any(b not in (0, 1) for b in bits):
        raise DomainError("x must be a bit sequence")
    n = len(bits) - k
    if k < 0 or n <= 0:
        raise DomainError(f"need 0 <= k < len(x), got k={k}, len={len(bits)}")
    if n % 2:
        raise DomainError(f"tail length n={n} must be even")
    tail = bits[k:]
    f, left, right = frequency(tail), frequency(tail[: n // 2]), frequency(tail[n // 2:])
    assert f == (left + right) / 2
    return f, left, right
