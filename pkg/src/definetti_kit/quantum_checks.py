"""Exact small-scale checks of the measurement-statistics bounds on multi-qubit states.

Every probability is a sum over the exact outcome distribution of
U^{(x) k} (x) V^{(x) n}; nothing is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InfeasibleError
from .gamma import GammaInstance, gamma
from .linalg import random_contraction
from .scalar_bounds import lemma1_bound, lemma3_delta
from .symmetric import BinaryPovm, outcome_distribution, random_permutation_invariant_density


@dataclass(frozen=True)
class QuantumLemma1Row:
    delta: float
    probability: float
    bound: float
    vacuous: bool

    @property
    def holds(self) -> bool:
        return self.probability <= self.bound

    def to_dict(self) -> dict:
        return {"delta": self.delta, "probability": self.probability, "bound": self.bound,
                "vacuous": self.vacuous, "holds": self.holds}


def _gamma_table(U1, V1, k: int, deltas) -> dict:
    """gamma(min(s/k + delta, 1)) for every count s and delta.

    An infeasible argument gives -inf, so the event counts as occurring; this
    is the most demanding reading of the inequality.
    """
    table = {}
    for delta in deltas:
        for s in range(k + 1):
            arg = min(s / k + delta, 1.0)
            try:
                table[(s, delta)] = gamma(GammaInstance(U1, V1, arg)).value
            except InfeasibleError:
                table[(s, delta)] = float("-inf")
    return table


def quantum_lemma1_check(rho, d: int, k: int, n: int, U1, V1, deltas) -> list[QuantumLemma1Row]:
    """Pr[f_tail > gamma(f_head + delta) + delta] against 8 k^{3/2} e^{-k delta^2}.

    ``U1`` and ``V1`` are the outcome-1 effects; the first k parts are measured
    with U and the remaining n with V.
    """
    effects = [BinaryPovm(np.asarray(U1))] * k + [BinaryPovm(np.asarray(V1))] * n
    dist = outcome_distribution(rho, d, effects)
    table = _gamma_table(U1, V1, k, deltas)
    rows = []
    for delta in deltas:
        p = 0.0
        for bits, prob in dist.items():
            s, r = sum(bits[:k]), sum(bits[k:])
            if r / n > table[(s, delta)] + delta:
                p += prob
        b = lemma1_bound(k, delta)
        rows.append(QuantumLemma1Row(float(delta), p, float(b), b.is_vacuous()))
    return rows


@dataclass(frozen=True)
class SupportRestrictionRow:
    probability: float
    hypothesis: bool
    bound: float

    @property
    def holds(self) -> bool:
        return (not self.hypothesis) or self.probability <= self.bound


def support_restriction_check(rho, d: int, k: int, n: int, U1, V1) -> SupportRestrictionRow:
    """Pr[no head outcome is 1 and the tail frequency exceeds k/(k+n)].

    The bound applies when gamma(delta) + delta <= k/(k+n) at delta = k/(7(k+n)).
    """
    effects = [BinaryPovm(np.asarray(U1))] * k + [BinaryPovm(np.asarray(V1))] * n
    dist = outcome_distribution(rho, d, effects)
    share = Fraction(k, k + n)
    p = sum(prob for bits, prob in dist.items()
            if sum(bits[:k]) == 0 and Fraction(sum(bits[k:]), n) > share)
    delta = lemma3_delta(k, n)
    try:
        hyp = gamma(GammaInstance(U1, V1, delta)).value + delta <= float(share)
    except InfeasibleError:
        hyp = False
    return SupportRestrictionRow(float(p), bool(hyp), float(lemma1_bound(k, delta)))


def random_lemma1_instance(d: int, parts: int, rng: np.random.Generator):
    """Permutation-invariant state and two random effects with 0 <= E <= I."""
    rho = random_permutation_invariant_density(d, parts, rng)
    return rho, random_contraction(d, rng), random_contraction(d, rng)
