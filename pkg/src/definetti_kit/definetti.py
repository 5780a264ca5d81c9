"""Constructive finite-dimensional de Finetti decompositions.

A finite family of unit vectors nu whose k-fold averages approximate the
normalized symmetric projector stands in for the Haar integral. Its achieved
operator-norm deviation ``mu`` is recomputed from the vectors and enters every
tolerance through :func:`tolerance_from`.

All per-vector work is batched: the family is an array of shape (count, d).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolation, DomainError, NumericalError, PreconditionError
from .scalar_bounds import binomial_ratio_bound, definetti_overlap_bound
from .symmetric import (
    SubspaceBasis,
    almost_iid_basis,
    check_size,
    dim_sym,
    fidelity,
    kron_power,
    occupations,
    partial_trace,
    random_unit_vectors,
    sym_basis,
    symmetry_defect,
)


def tolerance_from(mu: float) -> float:
    """Slack 4 mu + 2 sqrt(mu) granted to assertions for a family of deviation mu."""
    return 4.0 * mu + 2.0 * math.sqrt(max(mu, 0.0))


def dicke_coefficients(vectors: np.ndarray, k: int) -> np.ndarray:
    """Coordinates of nu^{(x) k} in the Dicke basis of Sym^k, one row per nu.

    c_m = sqrt(k! / prod m_i!) prod nu_i^{m_i}, in the order of ``occupations``.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    d = vectors.shape[1]
    occ = occupations(d, k)
    out = np.empty((vectors.shape[0], len(occ)), dtype=complex)
    lf = math.lgamma(k + 1)
    for j, m in enumerate(occ):
        coef = math.exp(0.5 * (lf - sum(math.lgamma(x + 1) for x in m)))
        term = np.full(vectors.shape[0], coef, dtype=complex)
        for i, e in enumerate(m):
            if e:
                term *= vectors[:, i] ** e
        out[:, j] = term
    return out


def family_deviation(vectors: np.ndarray, k: int) -> float:
    """|| (1/|V|) sum (nu nu^dagger)^{(x) k} - P_Sym / dim Sym^k ||_op on Sym^k."""
    vectors = np.atleast_2d(vectors)
    if k == 0:
        return 0.0
    C = dicke_coefficients(vectors, k)
    D = C.shape[1]
    G = C.T @ C.conj() / C.shape[0] - np.eye(D) / D
    w = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    return float(max(abs(w[0]), abs(w[-1])))


@dataclass(frozen=True)
class VectorFamily:
    """Unit vectors in C^d (rows) with their recomputed k-fold deviation."""

    vectors: np.ndarray
    k: int
    achieved_mu: float = field(default=float("nan"))
    seed: int | None = None

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        norms = np.linalg.norm(v, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise DomainError("family vectors must be unit vectors")
        object.__setattr__(self, "vectors", v)
        # never trust a supplied value
        object.__setattr__(self, "achieved_mu", family_deviation(v, self.k))

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def sym_dim(self) -> int:
        return dim_sym(self.d, self.k)

    @property
    def isometry_deviation(self) -> float:
        """|| U~^dagger U~ - P_Sym ||, which is dim Sym^k times achieved_mu."""
        return self.sym_dim * self.achieved_mu

    def with_k(self, k: int) -> VectorFamily:
        return VectorFamily(self.vectors, k, seed=self.seed)


def build_vector_family(d: int, k: int, count: int, seed: int, mu_target: float | None = None,
                        max_count: int = 1 << 17) -> VectorFamily:
    """Haar-sampled family, doubling the count until achieved_mu <= mu_target."""
    if d < 1 or k < 0:
        raise DomainError(f"need d >= 1 and k >= 0, got ({d}, {k})")
    D = dim_sym(d, k)
    if count < D:
        raise DomainError(f"count={count} is below dim Sym^k = {D}")
    rng = np.random.default_rng(seed)
    best = None
    while True:
        fam = VectorFamily(random_unit_vectors(d, count, rng), k, seed=seed)
        if best is None or fam.achieved_mu < best.achieved_mu:
            best = fam
        if mu_target is None or fam.achieved_mu <= mu_target:
            return fam
        if count * 2 > max_count:
            raise NumericalError(f"family did not reach mu <= {mu_target} by count {count}",
                                 state={"best_mu": best.achieved_mu, "count": count})
        count *= 2


def qubit_design_family(k: int = 1) -> VectorFamily:
    """The six eigenvectors of the Pauli matrices; exact for k <= 3 (mu = 0)."""
    s = 1 / math.sqrt(2)
    v = np.array([[1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]], dtype=complex)
    return VectorFamily(v, k)


# ---------------------------------------------------------- batched pieces


def line_unitaries(vectors: np.ndarray) -> np.ndarray:
    """Stack of unitaries whose first column is exactly each nu."""
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    c, d = v.shape
    M = np.concatenate([v[:, :, None], np.broadcast_to(np.eye(d), (c, d, d))], axis=2)
    Q, R = np.linalg.qr(M)
    phase = R[:, 0, 0] / np.abs(R[:, 0, 0])
    Q[:, :, 0] *= phase[:, None]
    return Q


def _batched_local(t: np.ndarray, mats: np.ndarray, sites: int) -> np.ndarray:
    """Apply mats[c] on each of ``sites`` factors of t[c] (t of shape (count, d, ..., d))."""
    count, d = t.shape[0], mats.shape[1]
    for s in range(1, sites + 1):
        t = np.moveaxis(t, s, -1)
        shp = t.shape
        t = (t.reshape(count, -1, d) @ np.swapaxes(mats, 1, 2)).reshape(shp)
        t = np.moveaxis(t, -1, s)
    return t


def _nonzero_digit_mask(d: int, m: int, k: int) -> np.ndarray:
    digits = np.stack(np.unravel_index(np.arange(d ** m), (d,) * m), axis=1) if m else np.zeros((1, 0), int)
    return np.sum(digits != 0, axis=1) <= k


def project_almost_iid_batch(vecs: np.ndarray, unitaries: np.ndarray, d: int, m: int, k: int) -> np.ndarray:
    """Project symmetric vectors on m parts onto Sym^m(C^d, nu^{(x) m-k}) for every nu.

    For symmetric input this is a rotation into a nu-adapted basis, a
    permutation-invariant coordinate mask (at most k digits away from nu),
    and the inverse rotation.
    """
    count = vecs.shape[0]
    t = vecs.reshape((count,) + (d,) * m)
    rot = _batched_local(t, np.conj(np.swapaxes(unitaries, 1, 2)), m).reshape(count, -1)
    rot = rot * _nonzero_digit_mask(d, m, k)[None, :]
    back = _batched_local(rot.reshape((count,) + (d,) * m), unitaries, m)
    return back.reshape(count, -1)


def contract_first(vecs: np.ndarray, nus: np.ndarray, d: int, k: int, m: int) -> np.ndarray:
    """(<nu|^{(x) k} (x) I) v for one vector v (d**(k+m),) against each nu, or row-wise."""
    left = _product_rows(np.conj(nus), k)
    v = np.asarray(vecs)
    if v.ndim == 1:
        return left @ v.reshape(d ** k, d ** m)
    return np.einsum("ca,cab->cb", left, v.reshape(v.shape[0], d ** k, d ** m))


def _product_rows(nus: np.ndarray, k: int) -> np.ndarray:
    out = np.ones((nus.shape[0], 1), dtype=complex)
    for _ in range(k):
        out = (out[:, :, None] * nus[:, None, :]).reshape(nus.shape[0], -1)
    return out


# ---------------------------------------------------- overlap tail check


@dataclass(frozen=True)
class OverlapTail:
    lhs: float
    rhs_exact: float
    rhs_exp: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs_exact + 1e-9


def overlap_tail_values(psis: np.ndarray, d: int, nu, k: int, n: int) -> np.ndarray:
    """<Psi| (nu nu^dagger)^{(x) k} (x) P_perp |Psi> for each row Psi."""
    psis = np.atleast_2d(psis)
    nu = np.asarray(nu, dtype=complex)
    chi = psis.reshape(psis.shape[0], d ** k, d ** (k + n))
    chi = np.einsum("a,cab->cb", kron_power(np.conj(nu)[None, :], k)[0], chi)
    U = line_unitaries(nu[None, :])
    Us = np.broadcast_to(U, (chi.shape[0], d, d))
    inside = project_almost_iid_batch(chi, Us, d, k + n, k)
    return np.sum(np.abs(chi) ** 2, axis=1) - np.sum(np.abs(inside) ** 2, axis=1)


def overlap_tail_check(Psi, d: int, nu, k: int, n: int) -> OverlapTail:
    """Quadratic form against the binomial ratio and its exponential bound."""
    Psi = np.asarray(Psi, dtype=complex)
    check_size(d, 2 * k + n)
    if symmetry_defect(Psi, d, 2 * k + n) > 1e-9:
        raise PreconditionError("Psi is not symmetric within 1e-9")
    lhs = float(overlap_tail_values(Psi[None, :], d, nu, k, n)[0])
    ratio = binomial_ratio_bound(k, n)
    return OverlapTail(lhs, float(ratio.exact), float(ratio.exp_bound))


def overlap_tail_max(d: int, nu, k: int, n: int) -> float:
    """Exact maximum of the quadratic form over unit vectors of Sym^{2k+n}(C^d)."""
    N = 2 * k + n
    B, _ = sym_basis(d, N)
    rows = np.asarray(B.T, dtype=complex)
    vals = overlap_form_matrix(rows, d, nu, k, n)
    w = np.linalg.eigvalsh(vals)
    return float(w[-1])


def overlap_form_matrix(rows: np.ndarray, d: int, nu, k: int, n: int) -> np.ndarray:
    """Gram matrix of the quadratic form on the span of the given rows."""
    nu = np.asarray(nu, dtype=complex)
    chi = rows.reshape(rows.shape[0], d ** k, d ** (k + n))
    chi = np.einsum("a,cab->cb", kron_power(np.conj(nu)[None, :], k)[0], chi)
    A = almost_iid_basis(nu, k, n)
    inside = chi @ A.conj()
    full = chi.conj() @ chi.T
    proj = inside.conj() @ inside.T
    G = full - proj
    return 0.5 * (G + G.conj().T)


# ------------------------------------------------------- decomposition


@dataclass(frozen=True)
class DefinettiDecomposition:
    weights: np.ndarray
    components: np.ndarray
    overlap: float
    bound: float
    tolerance: float
    achieved_mu: float
    inside_mass: float
    raw_norm: float
    perp_values: np.ndarray
    perp_cap: float

    @property
    def holds(self) -> bool:
        return self.overlap >= self.bound - self.tolerance

    @property
    def per_vector_holds(self) -> bool:
        return bool(np.all(self.perp_values <= self.perp_cap + 1e-9))

    def summary(self) -> dict:
        return {"overlap": self.overlap, "bound": self.bound, "tolerance": self.tolerance,
                "achieved_mu": self.achieved_mu, "max_perp": float(np.max(self.perp_values)),
                "perp_cap": self.perp_cap, "holds": self.holds}


def _lemma_df_pieces(phi: np.ndarray, d: int, k: int, n: int, family: VectorFamily):
    """Phi_nu and their projections, both as (count, d**(k+n)) arrays."""
    D = dim_sym(d, k)
    nus = family.vectors
    raw = math.sqrt(D) * contract_first(phi, nus, d, k, k + n)
    proj = project_almost_iid_batch(raw, line_unitaries(nus), d, k + n, k)
    return raw, proj


def definetti_decompose(Phi, d: int, k: int, n: int, family: VectorFamily,
                        check: bool = True) -> DefinettiDecomposition:
    """Split a symmetric (2k+n)-part vector into almost-i.i.d. components, one per nu.

    The overlap is |<Phi_hat, (U~ (x) I) Phi>| between normalized vectors:
    sqrt(A / N2) with A the mean of <Phi_nu|P_nu|Phi_nu> and N2 the mean of
    ||Phi_nu||^2.
    """
    Phi = np.asarray(Phi, dtype=complex)
    N = 2 * k + n
    check_size(d, N)
    if family.d != d or family.k != k:
        raise DomainError(f"family is for (d={family.d}, k={family.k}), need (d={d}, k={k})")
    if symmetry_defect(Phi, d, N) > 1e-9:
        raise PreconditionError("Phi is not symmetric within 1e-9")
    raw, proj = _lemma_df_pieces(Phi, d, k, n, family)
    raw_sq = np.sum(np.abs(raw) ** 2, axis=1)
    in_sq = np.sum(np.abs(proj) ** 2, axis=1)
    A, N2 = float(np.mean(in_sq)), float(np.mean(raw_sq))
    overlap = math.sqrt(A / N2) if N2 > 0 else 0.0
    err = definetti_overlap_bound(k, n, d, "2k+n")
    bound = 1.0 - float(err)
    tol = tolerance_from(family.achieved_mu)
    total = float(np.sum(in_sq))
    weights = in_sq / total if total > 0 else in_sq
    comps = np.where(in_sq[:, None] > 0, proj / np.sqrt(np.maximum(in_sq, 1e-300))[:, None], 0)
    perp_cap = dim_sym(d, k) * float(binomial_ratio_bound(k, n).exact)
    res = DefinettiDecomposition(weights, comps, overlap, bound, tol, family.achieved_mu,
                                 A, N2, raw_sq - in_sq, perp_cap)
    if check and not (res.holds and res.per_vector_holds):
        raise BoundViolation("de Finetti overlap check failed", report=res.summary())
    return res


def component_residual(component: np.ndarray, nu, k: int, n: int) -> float:
    """||(I - P) v|| for P the almost-i.i.d. projector along nu, built independently."""
    B = almost_iid_basis(nu, k, n)
    v = np.asarray(component)
    return float(np.linalg.norm(v - B @ (B.conj().T @ v)))


# ---------------------------------------------------- extended theorem


def _block_assignments(length: int, k: int, h: int, d: int):
    """Orthogonal rank decomposition of the restricted projector on one block.

    Yields (assignment, q0_positions): bit strings with t <= k ones; the first
    k - t zero positions are expanded over the subspace basis (indices < h),
    the ones over the complement (indices >= h), and the remaining positions
    keep the full subspace projector. Every yielded term has exactly
    length - k subspace-projector positions, and the terms are mutually
    orthogonal and sum to the restricted projector.
    """
    for bits in itertools.product((0, 1), repeat=length):
        t = sum(bits)
        if t > k:
            continue
        zeros = [i for i, b in enumerate(bits) if b == 0]
        ones = [i for i, b in enumerate(bits) if b == 1]
        expand_zero = zeros[: k - t]
        q0 = zeros[k - t:]
        ranges = [range(h)] * len(expand_zero) + [range(h, d)] * len(ones)
        for idx in itertools.product(*ranges):
            assign = dict(zip(expand_zero + ones, idx))
            yield assign, q0


def _select(tensor: np.ndarray, offset: int, length: int, assign: dict, q0: list, h: int) -> np.ndarray:
    """Fix assigned positions of one block to basis indices and restrict Q0 positions to the subspace.

    ``tensor`` has one axis per site; the block occupies axes offset..offset+length-1.
    Returns the tensor with the block's assigned axes removed and its Q0 axes
    truncated to the subspace coordinates; the surviving block axes keep their
    relative order.
    """
    index = [slice(None)] * tensor.ndim
    for pos, val in assign.items():
        index[offset + pos] = val
    for pos in q0:
        index[offset + pos] = slice(0, h)
    return tensor[tuple(index)]


@dataclass(frozen=True)
class Theorem1Result:
    p_nu: np.ndarray
    states: list
    fidelity: float
    bound: float
    tolerance: float
    achieved_mu: float
    residuals: np.ndarray
    reduced_input: np.ndarray
    mixture: np.ndarray

    @property
    def holds(self) -> bool:
        return self.fidelity > self.bound - self.tolerance

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def summary(self) -> dict:
        return {"fidelity": self.fidelity, "bound": self.bound, "tolerance": self.tolerance,
                "achieved_mu": self.achieved_mu, "max_residual": self.max_residual,
                "holds": self.holds}


def supported_basis(subspace: SubspaceBasis, parts: int, outside: int) -> np.ndarray:
    """Orthonormal basis of the symmetric vectors with at most ``outside`` parts off the subspace."""
    d, h = subspace.ambient_dim, subspace.dim
    B0, _ = sym_basis(d, parts, keep=lambda m: sum(m[h:]) <= outside)
    from .symmetric import apply_local
    return apply_local(B0.astype(complex), subspace.adapted_unitary(), d, parts)


def random_supported_density(subspace: SubspaceBasis, k: int, n: int, rng: np.random.Generator,
                             rank: int | None = None) -> np.ndarray:
    """Random density matrix on Sym^{4k+n}(H, Hbar^{(x) 3k+n})."""
    B = supported_basis(subspace, 4 * k + n, k)
    r = B.shape[1] if rank is None else rank
    g = rng.standard_normal((B.shape[1], r)) + 1j * rng.standard_normal((B.shape[1], r))
    core = g @ g.conj().T
    rho = B @ core @ B.conj().T
    return rho / np.trace(rho).real


def theorem1_decompose(rho, subspace: SubspaceBasis, k: int, n: int, family: VectorFamily,
                       check: bool = True, eig_cut: float = 1e-13) -> Theorem1Result:
    """Approximate tr_{2k} rho by a mixture of almost-i.i.d. states along family vectors.

    The family lives in the subspace coordinates (dimension ``subspace.dim``).
    Returns p_nu, the normalized component states on 2k+n parts (ambient
    coordinates), and the root fidelity against the reduced input.
    """
    d, h = subspace.ambient_dim, subspace.dim
    N = 4 * k + n
    M = 2 * k + n
    check_size(d, N)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d ** N, d ** N):
        raise DomainError(f"rho has shape {rho.shape}, expected {(d ** N, d ** N)}")
    if family.d != h or family.k != k:
        raise DomainError(f"family is for (d={family.d}, k={family.k}), need (d={h}, k={k})")
    S = supported_basis(subspace, N, k)
    leak = float(np.linalg.norm(rho - S @ (S.conj().T @ rho @ S) @ S.conj().T))
    if leak > 1e-8:
        raise PreconditionError(f"rho leaves Sym^(4k+n)(H, Hbar^(3k+n)) by {leak:.3e}")

    W = subspace.adapted_unitary()
    Wd = W.conj().T
    from .symmetric import apply_local
    # adapted coordinates: subspace = first h basis vectors
    rho_a = apply_local(apply_local(rho, Wd, d, N).T, Wd.conj(), d, N).T
    lam, vecs = np.linalg.eigh(0.5 * (rho_a + rho_a.conj().T))
    keep = lam > eig_cut
    lam, vecs = lam[keep], vecs[:, keep]
    lam = lam / lam.sum()

    nus = family.vectors
    count = family.count
    Ds = dim_sym(h, k)
    U_nu = line_unitaries(nus)
    nus_amb = np.concatenate([nus, np.zeros((count, d - h))], axis=1)
    assign_a = list(_block_assignments(2 * k, k, h, d))
    assign_b = list(_block_assignments(M, k, h, d))
    Bs, _ = sym_basis(d, M)

    # per-nu states accumulate in Dicke coordinates of Sym^M(C^d)
    acc = np.zeros((count, Bs.shape[1], Bs.shape[1]), dtype=complex)
    for li, psi in zip(lam, vecs.T):
        T = psi.reshape((d,) * N)
        for a_assign, a_q0 in assign_a:
            TA = _select(T, 0, 2 * k, a_assign, a_q0, h)
            p_ij = float(np.sum(np.abs(TA) ** 2))
            if p_ij < 1e-15:
                continue
            # TA axes: k subspace sites of block A, then the M sites of block B
            out = np.zeros((count,) + (d,) * M, dtype=complex)
            for b_assign, b_q0 in assign_b:
                Phi = _select(TA, k, M, b_assign, b_q0, h)
                if not np.any(Phi):
                    continue
                raw = math.sqrt(Ds) * contract_first(Phi.reshape(-1), nus, h, k, k + n)
                proj = project_almost_iid_batch(raw, U_nu, h, k + n, k)
                emb = np.zeros((count,) + (d,) * M, dtype=complex)
                index = [slice(None)] + [slice(None)] * M
                for pos, val in b_assign.items():
                    index[1 + pos] = val
                for pos in b_q0:
                    index[1 + pos] = slice(0, h)
                sub = emb[tuple(index)]
                sub[...] = proj.reshape(sub.shape)
                emb[tuple(index)] = sub
                out += emb / math.sqrt(count)
            vec = out.reshape(count, -1)
            sym = vec @ Bs
            t_ij = float(np.sum(np.abs(sym) ** 2))
            if t_ij <= 0:
                continue
            acc += (li * p_ij / t_ij) * np.einsum("ca,cb->cab", sym, sym.conj())

    p_nu = np.real(np.einsum("caa->c", acc))
    back = kron_power(W, M)
    states = []
    mixture = np.zeros((d ** M, d ** M), dtype=complex)
    residuals = []
    for c in range(count):
        if p_nu[c] <= 0:
            states.append(None)
            continue
        full = Bs @ (acc[c] / p_nu[c]) @ Bs.T
        st = back @ full @ back.conj().T
        states.append(st)
        mixture += p_nu[c] * st
        nu_amb = W @ nus_amb[c]
        B = almost_iid_basis(nu_amb, 2 * k, n)
        Pc = B @ B.conj().T
        residuals.append(float(np.linalg.norm(st - Pc @ st @ Pc)))
    reduced = partial_trace(rho, d, N, list(range(2 * k, N)))
    F = fidelity(reduced, mixture)
    bound = 1.0 - float(definetti_overlap_bound(k, n, h, "4k+n"))
    res = Theorem1Result(p_nu, states, F, bound, tolerance_from(family.achieved_mu), family.achieved_mu,
                         np.array(residuals), reduced, mixture)
    if check and not res.holds:
        raise BoundViolation("extended de Finetti fidelity check failed", report=res.summary())
    return res
