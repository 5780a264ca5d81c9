"""Dense Hermitian matrices with a cached eigendecomposition."""

from __future__ import annotations

import threading
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, NumericalError

HERMITIAN_TOL = 1e-12
RESIDUAL_TOL = 1e-9


class HermitianMatrix:
    """Immutable dense Hermitian matrix.

    The input is checked for Hermiticity (max entrywise |A - A^dagger|, relative
    to the largest entry) and then symmetrized exactly so that eigensolvers see
    an exactly Hermitian array.
    """

    __slots__ = ("_a", "_eig", "_lock", "notes")

    def __init__(self, entries, tol: float = HERMITIAN_TOL, notes=()):
        a = np.array(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DomainError(f"expected a non-empty square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a))))
        asym = float(np.max(np.abs(a - a.conj().T)))
        if asym > tol * scale:
            raise DomainError(f"matrix is not Hermitian: max |A - A^H| = {asym:.3e}")
        a = 0.5 * (a + a.conj().T)
        if not np.any(a.imag):
            a = a.real.copy()
        a.setflags(write=False)
        self._a = a
        self._eig = None
        self._lock = threading.Lock()
        self.notes = tuple(notes)

    @classmethod
    def diag(cls, values) -> HermitianMatrix:
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def identity(cls, dim: int) -> HermitianMatrix:
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._a

    def __array__(self, dtype=None, copy=None):
        return self._a if dtype is None else self._a.astype(dtype)

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim})"

    def __add__(self, other):
        return HermitianMatrix(self._a + np.asarray(other))

    def __sub__(self, other):
        return HermitianMatrix(self._a - np.asarray(other))

    def __mul__(self, c):
        if not np.isscalar(c) or np.iscomplexobj(c):
            raise TypeError("HermitianMatrix scales by real scalars only")
        return HermitianMatrix(self._a * float(c))

    __rmul__ = __mul__

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues ascending and orthonormal eigenvectors (columns), cached."""
        if self._eig is None:
            with self._lock:
                if self._eig is None:
                    w, v = np.linalg.eigh(self._a)
                    w.setflags(write=False)
                    v.setflags(write=False)
                    self._eig = (w, v)
        return self._eig

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh()[0]

    def lambda_max(self) -> float:
        if self._eig is not None:
            return float(self._eig[0][-1])
        return float(top_eigenpair(self._a)[0])

    def lambda_min(self) -> float:
        if self._eig is not None:
            return float(self._eig[0][0])
        return float(_subset_eigh(self._a, 0)[0][0])

    def norm(self) -> float:
        w = self.eigenvalues
        return float(max(abs(w[0]), abs(w[-1])))

    def residual(self) -> float:
        """max_i ||A v_i - w_i v_i|| relative to ||A||."""
        w, v = self.eigh()
        r = np.linalg.norm(self._a @ v - v * w, axis=0).max()
        return float(r / max(self.norm(), 1.0))

    def expectation(self, vec) -> float:
        vec = np.asarray(vec)
        return float(np.real(np.vdot(vec, self._a @ vec)))

    def trace_with(self, rho) -> float:
        return float(np.real(np.sum(self._a * np.asarray(rho).T)))


def top_eigenpair(a) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a Hermitian array and a unit eigenvector."""
    a = np.asarray(a)
    w, v = _subset_eigh(a, a.shape[0] - 1)
    return float(w[0]), v[:, 0]


def _subset_eigh(a, index: int):
    w, v = sla.eigh(a, subset_by_index=[index, index])
    if w.size == 0:
        # the default driver can return an empty subset on highly degenerate spectra
        w, v = sla.eigh(a, subset_by_index=[index, index], driver="evx")
    if w.size == 0:
        raise NumericalError(f"eigensolver returned no eigenvalue at index {index}")
    return w, v


def top_eigenspace(a, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs within ``tol`` (relative to ||a||) of the largest eigenvalue."""
    w, v = np.linalg.eigh(np.asarray(a))
    scale = max(1.0, abs(w[0]), abs(w[-1]))
    keep = w >= w[-1] - tol * scale
    return w[keep], v[:, keep]


def spectral_projector(A: HermitianMatrix, z0: float, tie_tol: float = 1e-9) -> HermitianMatrix:
    """Projector onto the eigenspaces of A with eigenvalue >= z0.

    Eigenvalues within ``tie_tol`` of z0 are included; their presence is
    recorded in ``notes`` and raised as a warning.
    """
    w, v = A.eigh()
    keep = w >= z0 - tie_tol
    notes = ()
    near = np.abs(w - z0) <= tie_tol
    if np.any(near):
        msg = f"{int(near.sum())} eigenvalue(s) within {tie_tol:g} of threshold {z0:g} included"
        warnings.warn(msg, stacklevel=2)
        notes = (msg,)
    vk = v[:, keep]
    return HermitianMatrix(vk @ vk.conj().T, notes=notes)


def is_projector(P, tol: float = 1e-9) -> bool:
    P = np.asarray(P)
    return bool(np.max(np.abs(P @ P - P)) <= tol and np.max(np.abs(P - P.conj().T)) <= tol)


def check_operator_interval(A: HermitianMatrix, name: str = "operator", tol: float = 1e-9):
    """Raise unless 0 <= A <= I within ``tol``."""
    lo, hi = A.lambda_min(), A.lambda_max()
    if lo < -tol or hi > 1.0 + tol:
        raise DomainError(f"{name} must satisfy 0 <= {name} <= I; spectrum in [{lo:.3e}, {hi:.3e}]")


def psd_sqrt(rho) -> np.ndarray:
    """Principal square root of a PSD matrix; small negative eigenvalues are clipped to zero."""
    w, v = np.linalg.eigh(np.asarray(rho))
    if w[0] < -1e-9 * max(1.0, w[-1]):
        raise NumericalError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


def random_contraction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian A with 0 <= A <= I: Haar eigenbasis, uniform eigenvalues."""
    q = haar_unitary(dim, rng)
    return (q * rng.uniform(0.0, 1.0, dim)) @ q.conj().T


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
