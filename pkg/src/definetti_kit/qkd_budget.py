"""Parameter chain for a block of N = m^4 oscillator signals with k = m^3 tests.

The chain, in parts:

* N = m^4 signals; k = m^3 are measured with X or Y.
* Support restriction on the remaining (m-1)k parts, with (m-2)k of them
  inside the low-energy subspace (failure term ``lemma3_failure``).
* Purification on doubled systems, then the extended de Finetti step with
  tested block 2k, leaving (m-5)k parts almost i.i.d. with (m-9)k factors
  along one vector (error term ``definetti_error``).
* Min-entropy step on (m-5)k parts with 4k deviating positions
  (``theorem2_delta``).

Vacuous terms (>= 1) are flagged, never clamped, and never summed into a
single security figure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError
from .gamma import ordered_map
from .logvalue import LogValue
from .scalar_bounds import definetti_overlap_bound, lemma3_bound, lemma3_delta, theorem2_delta
from .symmetric import partial_trace_general, von_neumann_entropy

MAX_M = 10 ** 6
MIN_DEFINETTI_M = 10  # (m-9)k must be positive


def window_lower(m: int) -> int:
    """ceil(12 ln(7m)): smallest energy cut the chain admits."""
    return math.ceil(12.0 * math.log(7.0 * m))


def window_upper(m: int) -> int:
    """floor(m^{3/2}), computed in integers."""
    return math.isqrt(m ** 3)


def lemma3_window_lower(k: int, n: int) -> int:
    """ceil(12 ln(7(k+n)/k)), the form the support-restriction step requires."""
    return math.ceil(12.0 * math.log(7.0 * (k + n) / k))


def low_energy_dim(n0: int) -> int:
    """Number of Fock levels j with 2j + 1 <= n0."""
    return (n0 - 1) // 2 + 1 if n0 >= 1 else 0


@dataclass(frozen=True)
class BudgetReport:
    m: int
    n0: int
    eps: float
    dim_x: int
    N: int = field(init=False)
    k: int = field(init=False)
    d: int = field(init=False)
    mu: float = field(init=False)
    mu_prime: float = field(init=False)
    window: tuple = field(init=False)
    blocks: dict = field(init=False)
    lemma3_failure: LogValue | None = field(init=False)
    definetti_error: LogValue | None = field(init=False)
    theorem2_delta: float | None = field(init=False)
    feasibility_flags: dict = field(init=False)
    notes: tuple = field(init=False)
    gamma_envelope: tuple | None = None

    def __post_init__(self):
        m, n0 = self.m, self.n0
        if not isinstance(m, int) or m < 2:
            raise DomainError(f"m must be an integer >= 2, got {m!r}")
        if not isinstance(n0, int) or n0 < 1:
            raise DomainError(f"n0 must be a positive integer, got {n0!r}")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")
        if self.dim_x < 2:
            raise DomainError(f"dim_x must be at least 2, got {self.dim_x}")
        k = m ** 3
        set_ = lambda name, v: object.__setattr__(self, name, v)  # noqa: E731
        set_("N", m ** 4)
        set_("k", k)
        set_("d", window_upper(m))
        set_("mu", 5.0 / m)
        set_("mu_prime", 4.0 / m)
        lo, hi = window_lower(m), window_upper(m)
        set_("window", (lo, hi))
        blocks = {
            "tested": k,
            "remaining": (m - 1) * k,
            "inside_subspace": (m - 2) * k,
            "purified_inside": (m - 3) * k,
            "almost_iid": (m - 5) * k,
            "iid_factors": (m - 9) * k,
        }
        set_("blocks", blocks)
        notes = []
        flags = {}
        flags["window_nonempty"] = lo <= hi
        flags["n0_in_window"] = lo <= n0 <= hi
        flags["n0_dimension_ok"] = n0 <= hi
        flags["lemma3_hypothesis"] = blocks["inside_subspace"] >= 2 * k
        flags["definetti_defined"] = m >= MIN_DEFINETTI_M

        l3 = None
        if blocks["inside_subspace"] >= 1:
            n3 = blocks["inside_subspace"]
            lo3 = lemma3_window_lower(k, n3)
            flags["window_forms_agree"] = lo3 == lo
            flags["n0_meets_lemma3_form"] = n0 >= lo3
            if lo3 != lo:
                notes.append(f"support-restriction threshold {lo3} differs from ceil(12 ln 7m) = {lo}")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                l3 = lemma3_bound(k, n3)
            delta = lemma3_delta(k, n3)
            share = k / (k + n3)
            if self.gamma_envelope is None:
                lhs = 5.0 * delta + 8.0 / math.sqrt(n0) * math.exp(-n0 / 12.0)
            else:
                slope, offset = self.gamma_envelope
                lhs = (slope + 1.0) * delta + offset
                notes.append(f"user envelope gamma(delta) <= {slope:g} delta + {offset:g}")
            flags["lemma3_proof_inequality"] = lhs <= share
        else:
            flags["window_forms_agree"] = False
            flags["n0_meets_lemma3_form"] = False
            flags["lemma3_proof_inequality"] = False
        set_("lemma3_failure", l3)

        dfe, t2 = None, None
        if flags["definetti_defined"]:
            dfe = definetti_overlap_bound(2 * k, blocks["iid_factors"], self.d, "4k+n")
            t2 = theorem2_delta(4 * k, blocks["iid_factors"], self.eps, self.dim_x)
        else:
            notes.append(f"m={m} leaves no i.i.d. factors; de Finetti and entropy terms undefined")
        set_("definetti_error", dfe)
        set_("theorem2_delta", t2)

        flags["lemma3_vacuous"] = l3 is None or l3.is_vacuous()
        flags["definetti_vacuous"] = dfe is None or dfe.is_vacuous()
        doubled = low_energy_dim(n0) ** 2
        flags["d_covers_doubled_subspace"] = doubled <= self.d
        if not flags["d_covers_doubled_subspace"]:
            notes.append(f"doubled low-energy dimension {doubled} exceeds d = {self.d}")
        for name, v in (("lemma3_failure", l3), ("definetti_error", dfe)):
            if v is not None and v.is_vacuous():
                notes.append(f"{name} is vacuous ({v.display})")
        window_ok = flags["n0_in_window"] if self.gamma_envelope is None else flags["n0_dimension_ok"]
        flags["chain_valid"] = bool(window_ok and flags["lemma3_hypothesis"] and flags["definetti_defined"]
                                    and flags["lemma3_proof_inequality"])
        set_("feasibility_flags", flags)
        set_("notes", tuple(notes))

    @property
    def total_failure(self) -> LogValue | None:
        """lemma3_failure + definetti_error; None when either is undefined."""
        if self.lemma3_failure is None or self.definetti_error is None:
            return None
        return self.lemma3_failure + self.definetti_error

    def to_dict(self) -> dict:
        lv = lambda v: None if v is None else v.to_dict()  # noqa: E731
        tot = self.total_failure
        return {
            "m": self.m, "N": self.N, "k": self.k, "d": self.d, "n0": self.n0,
            "eps": self.eps, "dim_x": self.dim_x,
            "mu": self.mu, "mu_prime": self.mu_prime,
            "window": list(self.window), "blocks": dict(self.blocks),
            "lemma3_failure": lv(self.lemma3_failure),
            "definetti_error": lv(self.definetti_error),
            "total_failure": lv(tot),
            "theorem2_delta": self.theorem2_delta,
            "gamma_envelope": None if self.gamma_envelope is None else list(self.gamma_envelope),
            "feasibility_flags": dict(self.feasibility_flags),
            "notes": list(self.notes),
        }


def compose_budget(m: int, n0: int, eps: float, dim_x: int) -> BudgetReport:
    return BudgetReport(m, n0, eps, dim_x)


def compose_budget_with_envelope(m: int, n0: int, eps: float, dim_x: int,
                                 gamma_slope: float, gamma_offset: float) -> BudgetReport:
    """Chain for an arbitrary test measurement with gamma(delta) <= slope * delta + offset."""
    if gamma_slope < 0 or gamma_offset < 0:
        raise DomainError("envelope slope and offset must be non-negative")
    return BudgetReport(m, n0, eps, dim_x, gamma_envelope=(float(gamma_slope), float(gamma_offset)))


# ------------------------------------------------------------- search


def _qualifies(m: int, target: float, eps: float, dim_x: int) -> tuple[bool, BudgetReport | None]:
    lo, hi = window_lower(m), window_upper(m)
    if lo > hi:
        return False, None
    rep = compose_budget(m, lo, eps, dim_x)
    tot = rep.total_failure
    ok = rep.feasibility_flags["chain_valid"] and tot is not None and tot <= target
    return bool(ok), rep


@dataclass(frozen=True)
class SearchResult:
    m_star: int | None
    report: BudgetReport
    found: bool
    evaluations: int


def find_min_m(target: float, eps: float, dim_x: int, scan_back: int = 64,
               workers: int | None = None) -> SearchResult:
    """Smallest m whose chain is valid at n0 = window minimum with total failure <= target.

    Gallop upward, bisect the indicator, then scan the ``scan_back`` values
    below the bisection result to catch a non-monotone edge.
    """
    if not 0.0 < target < 1.0:
        raise DomainError(f"target must lie in (0, 1), got {target}")
    evals = 0

    def test(m):
        nonlocal evals
        evals += 1
        return _qualifies(m, target, eps, dim_x)

    lo, hi = 2, MIN_DEFINETTI_M
    while True:
        ok, rep = test(hi)
        if ok:
            break
        if hi >= MAX_M:
            fallback = compose_budget(MAX_M, window_lower(MAX_M), eps, dim_x)
            return SearchResult(None, fallback, False, evals)
        lo, hi = hi, min(2 * hi, MAX_M)
    best, best_rep = hi, rep
    a, b = lo, hi  # indicator false at a (or untested edge), true at b
    while b - a > 1:
        mid = (a + b) // 2
        ok, rep = test(mid)
        if ok:
            b, best, best_rep = mid, mid, rep
        else:
            a = mid
    candidates = list(range(max(2, best - scan_back), best))
    results = ordered_map(lambda m: _qualifies(m, target, eps, dim_x), candidates, workers)
    evals += len(candidates)
    for m, (ok, rep) in zip(candidates, results):
        if ok:
            best, best_rep = m, rep
            break
    return SearchResult(best, best_rep, True, evals)


# -------------------------------------------------------- key-rate bound


def _classicality_check(sigma: np.ndarray, dim_x: int, dim_b: int, tol: float = 1e-9):
    blocks = sigma.reshape(dim_x, dim_b, dim_x, dim_b)
    for x in range(dim_x):
        for y in range(dim_x):
            if x != y:
                off = float(np.max(np.abs(blocks[x, :, y, :])))
                if off > tol:
                    raise PreconditionError(f"sigma_XB is not classical on X: block ({x}, {y}) has entry {off:.3e}")


def conditional_entropy(sigma_xb, dim_x: int) -> float:
    """S(XB) - S(B) for a state classical on X."""
    sigma = np.asarray(sigma_xb, dtype=complex)
    total = sigma.shape[0]
    if sigma.shape != (total, total) or total % dim_x:
        raise DomainError(f"sigma_XB of shape {sigma.shape} does not split with dim_x={dim_x}")
    dim_b = total // dim_x
    _classicality_check(sigma, dim_x, dim_b)
    sigma_b = partial_trace_general(sigma, [dim_x, dim_b], [1])
    return von_neumann_entropy(sigma) - von_neumann_entropy(sigma_b)


def min_entropy_rate(sigma_xb, k: int, n: int, eps: float, dim_x: int) -> float:
    """Per-signal smooth min-entropy lower bound S(X|B) - delta, in nats."""
    return conditional_entropy(sigma_xb, dim_x) - theorem2_delta(k, n, eps, dim_x)
