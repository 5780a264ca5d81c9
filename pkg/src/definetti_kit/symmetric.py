"""Dense multipartite linear algebra on (C^d)^{(x) n}.

Vectors are flat arrays of length d**n in C order: subsystem 0 is the most
significant digit. Every dense construction is capped at ambient dimension
``SIZE_GUARD`` and refuses larger inputs with :class:`ResourceGuardError`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError, ResourceGuardError
from .linalg import HermitianMatrix, psd_sqrt

SIZE_GUARD = 4096
_PERM_AVERAGE_GUARD = 5040


def check_size(d: int, n: int, guard: int = SIZE_GUARD) -> int:
    if d < 1 or n < 0:
        raise DomainError(f"need d >= 1 and n >= 0, got ({d}, {n})")
    size = d ** n
    if size > guard:
        raise ResourceGuardError(f"ambient dimension {d}^{n} = {size} exceeds the guard {guard}")
    return size


def dim_sym(d: int, n: int) -> int:
    """dim Sym^n(C^d) = C(n+d-1, d-1)."""
    return math.comb(n + d - 1, d - 1)


# ---------------------------------------------------------------- states


@dataclass(frozen=True)
class MultipartiteState:
    """Unit vector or density matrix on (C^d)^{(x) parts}."""

    local_dim: int
    parts: int
    data: np.ndarray

    def __post_init__(self):
        size = check_size(self.local_dim, self.parts)
        a = np.asarray(self.data, dtype=complex)
        if a.ndim == 1:
            if a.shape[0] != size:
                raise DomainError(f"vector has length {a.shape[0]}, expected {size}")
            nrm = np.linalg.norm(a)
            if abs(nrm - 1.0) > 1e-10:
                raise DomainError(f"state vector has norm {nrm!r}")
        elif a.ndim == 2:
            if a.shape != (size, size):
                raise DomainError(f"density matrix has shape {a.shape}, expected {(size, size)}")
            check_density(a)
        else:
            raise DomainError("data must be a vector or a square matrix")
        object.__setattr__(self, "data", a)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data


def check_density(rho, tol: float = 1e-10):
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise DomainError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise DomainError(f"density matrix has trace {tr!r}")
    mineig = np.linalg.eigvalsh(rho)[0]
    if mineig < -tol:
        raise DomainError(f"density matrix has eigenvalue {mineig:.3e} < 0")


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning a subspace of C^ambient_dim."""

    ambient_dim: int
    columns: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.columns, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.ambient_dim or c.shape[1] > self.ambient_dim:
            raise DomainError(f"columns of shape {c.shape} do not fit ambient dimension {self.ambient_dim}")
        if c.shape[1] and np.max(np.abs(c.conj().T @ c - np.eye(c.shape[1]))) > 1e-10:
            raise DomainError("subspace columns are not orthonormal")
        object.__setattr__(self, "columns", c)

    @classmethod
    def coordinate(cls, ambient_dim: int, dim: int) -> SubspaceBasis:
        return cls(ambient_dim, np.eye(ambient_dim)[:, :dim])

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T

    def adapted_unitary(self) -> np.ndarray:
        """Unitary whose first ``dim`` columns are the subspace basis."""
        return complete_basis(self.columns)

    def complement(self) -> np.ndarray:
        return self.adapted_unitary()[:, self.dim:]


def complete_basis(columns) -> np.ndarray:
    """Extend orthonormal columns to a unitary, keeping the given columns exactly."""
    c = np.asarray(columns, dtype=complex)
    d, h = c.shape
    if h == d:
        return c.copy()
    # the leading left singular vectors of I - C C^dagger span the complement
    u, _, _ = np.linalg.svd(np.eye(d) - c @ c.conj().T)
    return np.concatenate([c, u[:, : d - h]], axis=1)


# ---------------------------------------------------------- local actions


def apply_local(vecs, ops, d: int, n: int) -> np.ndarray:
    """Apply op_0 (x) ... (x) op_{n-1} to vectors (d**n,) or columns (d**n, r).

    ``ops`` is one matrix (used on every site) or a list of n matrices, each
    of shape (d_out, d).
    """
    a = np.asarray(vecs)
    single = a.ndim == 1
    if single:
        a = a[:, None]
    r = a.shape[1]
    t = a.reshape((d,) * n + (r,))
    if not isinstance(ops, (list, tuple)):
        ops = [ops] * n
    if len(ops) != n:
        raise DomainError(f"expected {n} local operators, got {len(ops)}")
    for i, op in enumerate(ops):
        op = np.asarray(op)
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [i])), 0, i)
    d_out = int(np.prod([np.asarray(op).shape[0] for op in ops]))
    out = t.reshape(d_out, r)
    return out[:, 0] if single else out


def kron_power(op, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, op)
    return out


def product_vector(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


# ------------------------------------------------------------ permutations


def _check_perm(pi, n):
    pi = tuple(int(x) for x in pi)
    if sorted(pi) != list(range(n)):
        raise DomainError(f"{pi} is not a permutation of {n} elements")
    return pi


def permute_vector(vec, d: int, n: int, pi) -> np.ndarray:
    """Move subsystem i to position pi[i]; works on vectors or column stacks."""
    pi = _check_perm(pi, n)
    a = np.asarray(vec)
    extra = a.shape[1:] if a.ndim > 1 else ()
    t = a.reshape((d,) * n + extra)
    inv = [0] * n
    for i, p in enumerate(pi):
        inv[p] = i
    axes = inv + list(range(n, n + len(extra)))
    return np.transpose(t, axes).reshape(a.shape)


def permutation_operator(d: int, n: int, pi) -> np.ndarray:
    """Unitary on (C^d)^{(x) n} sending subsystem i to position pi[i].

    Composition is a homomorphism: op(pi1 o pi2) = op(pi1) op(pi2) with
    (pi1 o pi2)(i) = pi1(pi2(i)).
    """
    size = check_size(d, n)
    return permute_vector(np.eye(size), d, n, pi)


def permute_operator(A, d: int, n: int, pi) -> np.ndarray:
    """pi A pi^dagger without forming the permutation matrix."""
    pi = _check_perm(pi, n)
    a = np.asarray(A)
    t = a.reshape((d,) * (2 * n))
    inv = [0] * n
    for i, p in enumerate(pi):
        inv[p] = i
    axes = inv + [n + x for x in inv]
    return np.transpose(t, axes).reshape(a.shape)


def compose(pi1, pi2) -> tuple:
    return tuple(pi1[pi2[i]] for i in range(len(pi2)))


def inverse(pi) -> tuple:
    inv = [0] * len(pi)
    for i, p in enumerate(pi):
        inv[p] = i
    return tuple(inv)


def symmetrize_operator(A, d: int, n: int) -> np.ndarray:
    """(1/n!) sum_pi pi A pi^dagger, by explicit enumeration of S_n."""
    if math.factorial(n) > _PERM_AVERAGE_GUARD:
        raise ResourceGuardError(f"{n}! permutations exceed the averaging guard")
    check_size(d, n)
    acc = np.zeros_like(np.asarray(A, dtype=complex))
    for pi in itertools.permutations(range(n)):
        acc += permute_operator(A, d, n, pi)
    return acc / math.factorial(n)


def max_permutation_defect(A, d: int, n: int, perms) -> tuple[float, tuple | None]:
    worst, arg = 0.0, None
    for pi in perms:
        dev = float(np.max(np.abs(permute_operator(A, d, n, pi) - A)))
        if dev > worst:
            worst, arg = dev, tuple(pi)
    return worst, arg


def random_permutations(n: int, count: int, rng: np.random.Generator) -> list[tuple]:
    return [tuple(int(x) for x in rng.permutation(n)) for _ in range(count)]


# -------------------------------------------------------- symmetric space


def _digits(d: int, n: int) -> np.ndarray:
    """Row i holds the base-d digits of basis index i (subsystem 0 first)."""
    size = d ** n
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.stack(np.unravel_index(np.arange(size), (d,) * n), axis=1)


def occupations(d: int, n: int) -> list[tuple[int, ...]]:
    """All occupation tuples (m_0, ..., m_{d-1}) with sum n, in a fixed order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(d), n):
        m = [0] * d
        for c in combo:
            m[c] += 1
        out.append(tuple(m))
    return out


def sym_basis(d: int, n: int, keep=None) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Orthonormal Dicke basis of Sym^n(C^d) as columns of a (d**n, D) matrix.

    ``keep`` optionally filters occupation tuples.
    """
    check_size(d, n)
    occ = occupations(d, n)
    if keep is not None:
        occ = [m for m in occ if keep(m)]
    col = {m: j for j, m in enumerate(occ)}
    digits = _digits(d, n)
    counts = np.stack([np.sum(digits == c, axis=1) for c in range(d)], axis=1) if n else np.zeros((1, d), int)
    B = np.zeros((d ** n, len(occ)))
    for i, m in enumerate(map(tuple, counts)):
        j = col.get(m)
        if j is not None:
            B[i, j] = 1.0
    B /= np.sqrt(np.maximum(B.sum(axis=0), 1.0))
    return B, occ


def sym_projector(d: int, n: int) -> HermitianMatrix:
    """Projector onto Sym^n(C^d), built from the Dicke basis."""
    B, _ = sym_basis(d, n)
    return HermitianMatrix(B @ B.T)


def sym_projector_by_average(d: int, n: int) -> np.ndarray:
    """(1/n!) sum_pi pi: an independent construction for cross-checks at small n."""
    size = check_size(d, n)
    if math.factorial(n) > _PERM_AVERAGE_GUARD:
        raise ResourceGuardError(f"{n}! permutations exceed the averaging guard")
    acc = np.zeros((size, size))
    eye = np.eye(size)
    for pi in itertools.permutations(range(n)):
        acc += permute_vector(eye, d, n, pi)
    return acc / math.factorial(n)


def project_symmetric(vec, d: int, n: int) -> np.ndarray:
    B, _ = sym_basis(d, n)
    return B @ (B.T @ np.asarray(vec))


def symmetry_defect(vec, d: int, n: int) -> float:
    return float(np.linalg.norm(np.asarray(vec) - project_symmetric(vec, d, n)))


# ------------------------------------------------ restricted projections


def _outside_count_mask(d: int, n: int, h: int, k: int) -> np.ndarray:
    """Basis strings (in adapted coordinates) with at most k digits >= h."""
    return np.sum(_digits(d, n) >= h, axis=1) <= k


def restricted_basis(subspace: SubspaceBasis, k: int, n: int) -> np.ndarray:
    """Orthonormal columns spanning the range of the restricted projector on k+n parts."""
    d = subspace.ambient_dim
    N = k + n
    check_size(d, N)
    mask = _outside_count_mask(d, N, subspace.dim, k)
    W = subspace.adapted_unitary()
    cols = np.eye(d ** N)[:, mask]
    return apply_local(cols, W, d, N)


def restricted_projector(subspace: SubspaceBasis, k: int, n: int) -> HermitianMatrix:
    """Sum over bit strings with at most k ones of P_{b_1} (x) ... (x) P_{b_{k+n}}.

    P_0 projects onto the subspace and P_1 onto its complement. In a basis
    adapted to the subspace this is diagonal: keep the strings with at most k
    digits in the complement.
    """
    if k < 0 or n < 0:
        raise DomainError(f"need k, n >= 0, got ({k}, {n})")
    M = restricted_basis(subspace, k, n)
    return HermitianMatrix(M @ M.conj().T)


def restricted_projector_by_sum(subspace: SubspaceBasis, k: int, n: int) -> np.ndarray:
    """The same projector assembled term by term from the bit-string sum."""
    d = subspace.ambient_dim
    N = k + n
    check_size(d, N)
    P0 = subspace.projector()
    P1 = np.eye(d) - P0
    acc = np.zeros((d ** N, d ** N), dtype=complex)
    for bits in itertools.product((0, 1), repeat=N):
        if sum(bits) <= k:
            term = np.ones((1, 1), dtype=complex)
            for b in bits:
                term = np.kron(term, P1 if b else P0)
            acc += term
    return acc


def line_basis(nu) -> np.ndarray:
    """Unitary with first column exactly nu (normalized)."""
    nu = np.asarray(nu, dtype=complex)
    nrm = np.linalg.norm(nu)
    if nrm == 0:
        raise DomainError("nu must be nonzero")
    return complete_basis((nu / nrm)[:, None])


def almost_iid_basis(nu, k: int, n: int) -> np.ndarray:
    """Orthonormal basis of Sym^{k+n}(C^d, nu^{(x) n}).

    In a basis whose first vector is nu these are the Dicke states with
    occupation at least n in the nu direction.
    """
    nu = np.asarray(nu, dtype=complex)
    d = nu.shape[0]
    check_size(d, k + n)
    B0, _ = sym_basis(d, k + n, keep=lambda m: m[0] >= n)
    return apply_local(B0.astype(complex), line_basis(nu), d, k + n)


def almost_iid_projector(nu, k: int, n: int) -> HermitianMatrix:
    """Projector onto the symmetric vectors with at least n factors along nu."""
    M = almost_iid_basis(nu, k, n)
    return HermitianMatrix(M @ M.conj().T)


def almost_iid_dim(d: int, k: int, n: int) -> int:
    return sum(dim_sym(d - 1, j) for j in range(k + 1)) if d > 1 else 1


# ------------------------------------------------------ partial operations


def partial_trace(rho, d: int, n: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the subsystems ``keep`` (in increasing order)."""
    keep = sorted(int(x) for x in keep)
    drop = [i for i in range(n) if i not in keep]
    t = np.asarray(rho).reshape((d,) * (2 * n))
    # contract each dropped subsystem with itself, highest index first
    cur = n
    for i in sorted(drop, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + cur)
        cur -= 1
    m = d ** len(keep)
    return t.reshape(m, m)


def partial_trace_general(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    cur = n
    for i in sorted((i for i in range(n) if i not in keep), reverse=True):
        t = np.trace(t, axis1=i, axis2=i + cur)
        cur -= 1
    m = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(m, m)


def fidelity(rho, sigma) -> float:
    """Root fidelity tr|sqrt(rho) sqrt(sigma)|."""
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    return float(np.sum(s))


def pure_fidelity(a, b) -> float:
    return float(abs(np.vdot(a, b)))


def von_neumann_entropy(rho) -> float:
    """-sum lambda ln lambda in nats, with 0 ln 0 = 0."""
    w = np.linalg.eigvalsh(np.asarray(rho))
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


# --------------------------------------------------------- purification


def purify_symmetric(rho, d: int, parts: int, subspace: SubspaceBasis | None = None,
                     k_support: int | None = None, perm_checks: int = 20,
                     seed: int = 0) -> MultipartiteState:
    """Permutation-invariant purification on (C^d (x) C^d)^{(x) parts}.

    Phi = sum_j (sqrt(rho) (x) I) e_j (x) e_j with {e_j} a product basis adapted
    to ``subspace``; the pairs (system_i, purifier_i) are interleaved so that
    each part has local dimension d^2. The square root (rather than rho itself)
    makes the partial trace over the purifying copies return rho.

    With ``subspace`` and ``k_support`` the support of rho must lie in the
    restricted range with at most k_support parts outside the subspace; Phi
    then has at most 2 k_support doubled parts outside subspace (x) subspace.
    """
    rho = np.asarray(rho, dtype=complex)
    size = check_size(d, parts)
    check_size(d * d, parts)
    if rho.shape != (size, size):
        raise DomainError(f"rho has shape {rho.shape}, expected {(size, size)}")
    check_density(rho, tol=1e-9)
    rng = np.random.default_rng(seed)
    perms = random_permutations(parts, perm_checks, rng)
    defect, bad = max_permutation_defect(rho, d, parts, perms)
    if defect > 1e-9:
        raise PreconditionError(f"rho is not permutation invariant: defect {defect:.3e} under {bad}")
    if subspace is None:
        subspace = SubspaceBasis(d, np.eye(d))
        k_support = 0
    if k_support is None:
        k_support = parts
    R = restricted_basis(subspace, k_support, parts - k_support)
    leak = float(np.linalg.norm(rho - R @ (R.conj().T @ rho)))
    if leak > 1e-9:
        raise PreconditionError(f"rho leaves the restricted support by {leak:.3e}")

    W = subspace.adapted_unitary()
    # purifier side of sum_j e_j (x) e_j in the adapted basis is (W W^T)^{(x) parts}
    M = apply_local(psd_sqrt(rho).T, W @ W.T, d, parts).T
    t = M.reshape((d,) * (2 * parts))
    order = [x for i in range(parts) for x in (i, parts + i)]
    phi = np.transpose(t, order).reshape(-1)
    return MultipartiteState(d * d, parts, phi / np.linalg.norm(phi))


def doubled_subspace(subspace: SubspaceBasis) -> SubspaceBasis:
    return SubspaceBasis(subspace.ambient_dim ** 2, np.kron(subspace.columns, subspace.columns))


def purification_checks(phi: MultipartiteState, rho, d: int, parts: int,
                        subspace: SubspaceBasis | None = None, k_support: int = 0,
                        perm_checks: int = 20, seed: int = 1) -> dict:
    """Residuals for the three purification properties."""
    vec = phi.data
    t = vec.reshape((d, d) * parts)
    sys_axes = [2 * i for i in range(parts)]
    pur_axes = [2 * i + 1 for i in range(parts)]
    m = np.transpose(t, sys_axes + pur_axes).reshape(d ** parts, d ** parts)
    reduced = m @ m.conj().T
    trace_err = float(np.max(np.abs(reduced - np.asarray(rho))))
    rng = np.random.default_rng(seed)
    perm_err = max((float(np.linalg.norm(permute_vector(vec, d * d, parts, pi) - vec))
                    for pi in random_permutations(parts, perm_checks, rng)), default=0.0)
    if subspace is None:
        subspace = SubspaceBasis(d, np.eye(d))
    R = restricted_basis(doubled_subspace(subspace), 2 * k_support, max(parts - 2 * k_support, 0)) \
        if 2 * k_support <= parts else None
    support_err = 0.0 if R is None else float(np.linalg.norm(vec - R @ (R.conj().T @ vec)))
    return {"partial_trace": trace_err, "permutation": perm_err, "support": support_err}


# ------------------------------------------------------------ measurement


@dataclass(frozen=True)
class BinaryPovm:
    """Two-outcome measurement given by its outcome-1 effect."""

    effect: HermitianMatrix

    def __post_init__(self):
        e = self.effect if isinstance(self.effect, HermitianMatrix) else HermitianMatrix(self.effect)
        lo, hi = e.lambda_min(), e.lambda_max()
        if lo < -1e-9 or hi > 1 + 1e-9:
            raise DomainError(f"effect spectrum [{lo:.3e}, {hi:.3e}] leaves [0, 1]")
        object.__setattr__(self, "effect", e)

    def elements(self) -> np.ndarray:
        e1 = self.effect.entries
        return np.stack([np.eye(e1.shape[0]) - e1, e1])


def outcome_distribution(rho, d: int, effects: Sequence[BinaryPovm]) -> dict[tuple[int, ...], float]:
    """Exact Pr[b] = tr((E_{b_1} (x) ... (x) E_{b_m}) rho) for all 2^m strings."""
    m = len(effects)
    if m > 16:
        raise ResourceGuardError(f"{m} parts exceed the 16-part guard")
    size = check_size(d, m)
    rho = np.asarray(rho)
    if rho.shape != (size, size):
        raise DomainError(f"rho has shape {rho.shape}, expected {(size, size)}")
    t = rho.reshape((d,) * (2 * m))
    # contract site 0 each round; its row axis is 0 and its column axis sits after the remaining rows
    for i, povm in enumerate(effects):
        E = povm.elements()
        rows = m - i
        t = np.tensordot(E, t, axes=([2, 1], [0, rows]))
        t = np.moveaxis(t, 0, -1)
    probs = np.real(t).reshape(-1)
    return {bits: float(probs[idx]) for idx, bits in enumerate(itertools.product((0, 1), repeat=m))}


def conditional_marginal(rho, d: int, parts: int, measured: dict[int, tuple[BinaryPovm, int]],
                         site: int) -> tuple[float, np.ndarray]:
    """Probability of the given outcomes and the normalized state of ``site`` conditioned on them."""
    if site in measured:
        raise DomainError("the conditioned site must not be measured")
    ops = []
    for i in range(parts):
        if i in measured:
            povm, b = measured[i]
            E = povm.elements()[b]
            ops.append(psd_sqrt(E))
        else:
            ops.append(np.eye(d))
    K = np.ones((1, 1), dtype=complex)
    for op in ops:
        K = np.kron(K, op)
    post = K @ np.asarray(rho) @ K.conj().T
    red = partial_trace(post, d, parts, [site])
    p = float(np.trace(red).real)
    return p, (red / p if p > 0 else red)


# ------------------------------------------------------------ random input


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_permutation_invariant_density(d: int, n: int, rng: np.random.Generator,
                                         rank: int | None = None) -> np.ndarray:
    rho = symmetrize_operator(random_density(d ** n, rng, rank), d, n)
    return 0.5 * (rho + rho.conj().T)


def random_symmetric_vector(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in Sym^n(C^d)."""
    B, _ = sym_basis(d, n)
    c = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
    v = B @ c
    return v / np.linalg.norm(v)


def random_unit_vectors(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vectors in C^d as rows (normalized complex Gaussians)."""
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
