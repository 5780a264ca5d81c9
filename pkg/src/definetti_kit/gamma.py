"""gamma_{U->V}(delta) = sup { tr(V s) : s a state, tr(U s) <= delta } on finite spaces.

The problem is solved through its Lagrange dual

    g(lam) = lam * delta + lambda_max(V - lam U),   gamma = min_{lam >= 0} g(lam),

a convex function of one variable minimized by golden-section search. Every
top eigenvector met during the search is a pure state; the primal value is the
best mixture of at most two of them that meets the constraint, so each result
carries its own certificate: ``duality_gap = value - primal_value``.

On a truncated Fock space the computed gamma is a lower bound on the
untruncated supremum (provided the effects are compressions), so truncated
runs can confirm the upper bounds they are compared with but never refute
them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BoundViolation, DomainError, InfeasibleError, NumericalError
from .fock import FockCutoff, lemma2_operators
from .linalg import HermitianMatrix, check_operator_interval, is_projector, top_eigenpair
from .scalar_bounds import GammaBoundParams, lemma2_bound

FEAS_TOL = 1e-10
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GammaInstance:
    U: HermitianMatrix
    V: HermitianMatrix
    delta: float

    def __post_init__(self):
        if not isinstance(self.U, HermitianMatrix):
            object.__setattr__(self, "U", HermitianMatrix(self.U))
        if not isinstance(self.V, HermitianMatrix):
            object.__setattr__(self, "V", HermitianMatrix(self.V))
        if self.U.dim != self.V.dim:
            raise DomainError(f"U and V have different dimensions ({self.U.dim}, {self.V.dim})")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")
        check_operator_interval(self.U, "U")
        check_operator_interval(self.V, "V")


@dataclass(frozen=True)
class GammaResult:
    value: float
    lambda_star: float
    sigma_star: np.ndarray
    duality_gap: float
    primal_value: float
    constraint_value: float
    iterations: int = 0
    notes: tuple = field(default_factory=tuple)

    def check_certificate(self, delta: float, gap_tol: float = 1e-7):
        """Raise NumericalError unless sigma_star is a feasible state with a small gap."""
        s = self.sigma_star
        tr = float(np.trace(s).real)
        mineig = float(np.linalg.eigvalsh(s)[0])
        problems = []
        if abs(tr - 1.0) > 1e-10:
            problems.append(f"trace {tr!r}")
        if mineig < -1e-10:
            problems.append(f"min eigenvalue {mineig:.3e}")
        if self.constraint_value > delta + 1e-8:
            problems.append(f"tr(U sigma) = {self.constraint_value!r} > delta + 1e-8")
        if self.duality_gap > gap_tol:
            problems.append(f"duality gap {self.duality_gap:.3e}")
        if problems:
            raise NumericalError("gamma certificate failed: " + "; ".join(problems))


def dual_function(U, V, delta: float, lam: float) -> float:
    """g(lam) = lam delta + lambda_max(V - lam U)."""
    return lam * delta + top_eigenpair(np.asarray(V) - lam * np.asarray(U))[0]


class _Point:
    __slots__ = ("lam", "g", "vec", "u", "v")

    def __init__(self, lam, g, vec, u, v):
        self.lam, self.g, self.vec, self.u, self.v = lam, g, vec, u, v


def _evaluate(Ua, Va, delta, lam):
    w, vec = top_eigenpair(Va - lam * Ua)
    u = float(np.real(np.vdot(vec, Ua @ vec)))
    v = float(np.real(np.vdot(vec, Va @ vec)))
    return _Point(lam, lam * delta + w, vec, u, v)


def _best_mixture(points, delta):
    """Largest tr(V s) over mixtures of at most two evaluated vectors with tr(U s) <= delta."""
    best = (-math.inf, None)
    feas = [p for p in points if p.u <= delta]
    for p in feas:
        if p.v > best[0]:
            best = (p.v, (p, None, 1.0))
    above = [p for p in points if p.u > delta]
    for a in above:
        for b in feas:
            if a.v <= b.v:
                continue
            t = (delta - b.u) / (a.u - b.u)
            val = t * a.v + (1.0 - t) * b.v
            if val > best[0]:
                best = (val, (a, b, t))
    return best


def _state(choice):
    a, b, t = choice
    s = t * np.outer(a.vec, a.vec.conj())
    if b is not None:
        s = s + (1.0 - t) * np.outer(b.vec, b.vec.conj())
    return s


def _kernel_gamma(U: HermitianMatrix, V: HermitianMatrix, delta: float):
    """delta at (numerically) lambda_min(U): optimize V over the bottom eigenspace of U."""
    w, vecs = U.eigh()
    K = vecs[:, w <= w[0] + FEAS_TOL]
    Vk = K.conj().T @ V.entries @ K
    val, y = top_eigenpair(0.5 * (Vk + Vk.conj().T))
    x = K @ y
    s = np.outer(x, x.conj())
    return GammaResult(value=val, lambda_star=math.inf, sigma_star=s, duality_gap=0.0,
                       primal_value=V.expectation(x), constraint_value=U.expectation(x),
                       notes=(f"constraint forces the bottom eigenspace of U (dim {K.shape[1]})",))


def gamma(instance: GammaInstance, max_iter: int = 400, rtol: float = 1e-12) -> GammaResult:
    U, V, delta = instance.U, instance.V, float(instance.delta)
    Ua, Va = U.entries, V.entries
    lmin_u = U.lambda_min()
    if lmin_u > delta + FEAS_TOL:
        raise InfeasibleError(f"no state has tr(U s) <= {delta}: lambda_min(U) = {lmin_u!r}",
                              lambda_min=lmin_u)
    if delta <= lmin_u + FEAS_TOL:
        return _kernel_gamma(U, V, delta)

    p0 = _evaluate(Ua, Va, delta, 0.0)
    points = [p0]
    if p0.u <= delta + FEAS_TOL:
        # the unconstrained maximizer is feasible; the constraint is inactive
        s = np.outer(p0.vec, p0.vec.conj())
        return GammaResult(value=p0.g, lambda_star=0.0, sigma_star=s, duality_gap=0.0,
                           primal_value=p0.v, constraint_value=p0.u,
                           notes=("constraint inactive",))

    # concavity of gamma bounds the multiplier: lam* <= gamma(delta) / (delta - lambda_min(U))
    lam_hi = (V.lambda_max() + 1.0) / max(delta - lmin_u, FEAS_TOL)
    lo, hi = 0.0, lam_hi
    c, d = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
    pc, pd = _evaluate(Ua, Va, delta, c), _evaluate(Ua, Va, delta, d)
    points += [pc, pd]
    it = 0
    while hi - lo > rtol * max(1.0, lo):
        it += 1
        if it > max_iter:
            raise NumericalError("golden-section search did not converge",
                                 state={"bracket": (lo, hi), "iterations": it})
        if pc.g < pd.g:
            hi, d, pd = d, c, pc
            c = hi - _GOLDEN * (hi - lo)
            pc = _evaluate(Ua, Va, delta, c)
            points.append(pc)
        else:
            lo, c, pc = c, d, pd
            d = lo + _GOLDEN * (hi - lo)
            pd = _evaluate(Ua, Va, delta, d)
            points.append(pd)
    for lam in (lo, hi):
        points.append(_evaluate(Ua, Va, delta, lam))

    best_dual = min(points, key=lambda p: p.g)
    primal, choice = _best_mixture(points, delta)
    if choice is None:
        raise NumericalError("no feasible primal candidate found", state={"bracket": (lo, hi)})
    sigma = _state(choice)
    constraint = float(np.real(np.sum(Ua * sigma.T)))
    gap = best_dual.g - primal
    return GammaResult(value=best_dual.g, lambda_star=best_dual.lam, sigma_star=sigma,
                       duality_gap=gap, primal_value=primal, constraint_value=constraint,
                       iterations=it)


def gamma_value(U, V, delta) -> float:
    return gamma(GammaInstance(U, V, delta)).value


def gamma_generic(U1: HermitianMatrix, subspace_projector: HermitianMatrix, delta: float) -> GammaResult:
    """gamma_{U1 -> I - P} for a projector P onto the retained subspace."""
    P = subspace_projector if isinstance(subspace_projector, HermitianMatrix) else HermitianMatrix(subspace_projector)
    if not is_projector(P.entries):
        raise DomainError("subspace_projector is not idempotent within 1e-9")
    comp = HermitianMatrix(np.eye(P.dim) - P.entries)
    return gamma(GammaInstance(U1, comp, delta))


def worker_count() -> int:
    """Worker cap from DEFINETTI_KIT_THREADS, defaulting to the machine's parallelism."""
    env = os.environ.get("DEFINETTI_KIT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"DEFINETTI_KIT_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def ordered_map(fn, items: Sequence, workers: int | None = None) -> list:
    """map preserving input order, on a thread pool when more than one worker is allowed."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class Lemma2Row:
    delta: float
    gamma: float | None
    bound: float
    margin: float | None
    duality_gap: float | None
    gamma_doubled: float | None
    drift: float | None
    status: str

    @property
    def holds(self) -> bool:
        return self.status in ("ok", "infeasible")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"holds": self.holds}


@dataclass(frozen=True)
class Lemma2Table:
    n0: int
    n_cut: int
    construction: str
    v1_threshold: str
    rows: tuple[Lemma2Row, ...]

    @property
    def max_drift(self) -> float:
        drifts = [r.drift for r in self.rows if r.drift is not None]
        return max(drifts) if drifts else 0.0

    @property
    def max_gap(self) -> float:
        gaps = [r.duality_gap for r in self.rows if r.duality_gap is not None]
        return max(gaps) if gaps else 0.0

    @property
    def violations(self) -> list[Lemma2Row]:
        return [r for r in self.rows if not r.holds]

    def raise_for_violations(self):
        bad = self.violations
        if bad:
            raise BoundViolation(f"{len(bad)} energy-cut bound violation(s) at n0={self.n0}",
                                 report={"rows": [r.to_dict() for r in bad]})


def _solve_row(U, V, delta):
    try:
        res = gamma(GammaInstance(U, V, delta))
    except InfeasibleError:
        return None
    return res


def verify_lemma2(n0: int, n_cut: int, delta_grid: Sequence[float], construction: str = "compressed",
                  v1_threshold: str = "quadrature", doubled: bool = True,
                  workers: int | None = None) -> Lemma2Table:
    """gamma_{U1->V1}(delta) at truncation n_cut (and 2 n_cut) next to the closed-form bound.

    An infeasible delta (no truncated state meets the constraint) satisfies the
    bound vacuously and is reported with status ``"infeasible"``.
    """
    cutoff = FockCutoff(n_cut, n0)
    for d in delta_grid:
        if not 0.0 <= d <= 1.0:
            raise DomainError(f"delta grid entries must lie in [0, 1], got {d}")
    U, V = lemma2_operators(cutoff, construction, v1_threshold)
    base = ordered_map(lambda d: _solve_row(U, V, d), list(delta_grid), workers)
    if doubled:
        U2, V2 = lemma2_operators(cutoff.doubled(), construction, v1_threshold)
        dbl = ordered_map(lambda d: _solve_row(U2, V2, d), list(delta_grid), workers)
    else:
        dbl = [None] * len(base)
    params = GammaBoundParams(n0)
    rows = []
    for d, r1, r2 in zip(delta_grid, base, dbl):
        b = lemma2_bound(params, d)
        if r1 is None:
            rows.append(Lemma2Row(d, None, b, None, None, None if r2 is None else r2.value,
                                  None, "infeasible"))
            continue
        g2 = None if r2 is None else r2.value
        drift = None if r2 is None else abs(r2.value - r1.value)
        status = "ok" if r1.value <= b else "violated"
        rows.append(Lemma2Row(d, r1.value, b, b - r1.value, r1.duality_gap, g2, drift, status))
    return Lemma2Table(n0, n_cut, construction, v1_threshold, tuple(rows))


def brute_force_gamma(U, V, delta: float, samples: int, rng: np.random.Generator,
                      rank: int | None = None) -> float:
    """Largest tr(V s) over random feasible density matrices (Ginibre ensemble).

    A lower estimate of gamma; used as an independent oracle at dimension <= 3.
    """
    Ua, Va = np.asarray(U), np.asarray(V)
    dim = Ua.shape[0]
    rank = dim if rank is None else rank
    best = -math.inf
    chunk = 20000
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        g = rng.standard_normal((m, dim, rank)) + 1j * rng.standard_normal((m, dim, rank))
        rho = g @ np.conj(np.swapaxes(g, 1, 2))
        rho /= np.trace(rho, axis1=1, axis2=2).real[:, None, None]
        tu = np.einsum("ij,mji->m", Ua, rho).real
        tv = np.einsum("ij,mji->m", Va, rho).real
        ok = tu <= delta
        if np.any(ok):
            best = max(best, float(tv[ok].max()))
        done += m
    return best
