"""Truncated Fock-space operators for the energy-cut measurement pair.

The Fock basis {|0>, ..., |n_cut-1>} truncates L^2(R). Two constructions of
the quadrature-threshold effect are offered:

``"compressed"`` (default)
    P_c 1{|x| >= a} P_c, the exact compression of the infinite-dimensional
    spectral projector onto the truncated span, computed from Hermite-function
    integrals. Every state on the truncated span is a genuine state of the
    oscillator, so gamma computed with these operators is a certified lower
    bound on the untruncated value and grows monotonically with n_cut.

``"truncated"``
    Spectral projectors of the truncated matrices X^2 and Y^2. Cheaper to
    describe but not a compression of anything; gamma computed this way is
    neither a bound nor monotone in n_cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import DomainError, NumericalError, TruncationError
from .linalg import HermitianMatrix, spectral_projector
from .scalar_bounds import log_regularized_upper_gamma_table, regularized_upper_gamma


@dataclass(frozen=True)
class FockCutoff:
    """Basis size ``n_cut`` and energy threshold ``n0``.

    The margin n_cut >= 4 n0 is enforced unless ``enforce_margin`` is False,
    which small worked examples need.
    """

    n_cut: int
    n0: int = 1
    enforce_margin: bool = True

    def __post_init__(self):
        if not isinstance(self.n_cut, int) or self.n_cut < 1:
            raise DomainError(f"n_cut must be a positive integer, got {self.n_cut!r}")
        if not isinstance(self.n0, int) or self.n0 < 1:
            raise DomainError(f"n0 must be a positive integer, got {self.n0!r}")
        if self.enforce_margin and self.n_cut < 4 * self.n0:
            raise DomainError(f"n_cut={self.n_cut} violates the margin n_cut >= 4*n0={4 * self.n0}")

    def doubled(self) -> FockCutoff:
        return FockCutoff(2 * self.n_cut, self.n0, self.enforce_margin)


def lowering_operator(n_cut: int) -> np.ndarray:
    """Truncated a with <n|a|n+1> = sqrt(n+1)."""
    return np.diag(np.sqrt(np.arange(1, n_cut, dtype=float)), k=1)


def quadratures(cutoff: FockCutoff) -> tuple[HermitianMatrix, HermitianMatrix]:
    """X = (a + a^dagger)/sqrt 2 and Y = (a - a^dagger)/(i sqrt 2)."""
    if cutoff.n_cut < 2:
        raise DomainError("quadratures need n_cut >= 2")
    a = lowering_operator(cutoff.n_cut)
    ad = a.T
    X = (a + ad) / math.sqrt(2.0)
    Y = (a - ad) / (1j * math.sqrt(2.0))
    return HermitianMatrix(X), HermitianMatrix(Y)


def number_operator(n_cut: int) -> HermitianMatrix:
    return HermitianMatrix.diag(np.arange(n_cut, dtype=float))


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Rows psi_0..psi_{n_max-1} at points x, by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    psi = np.zeros((n_max, x.size))
    psi[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max - 1):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * x * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def window_compression(n_cut: int, a: float, nodes: int | None = None) -> np.ndarray:
    """<m| 1{|x| < a} |n> for m, n < n_cut, by Gauss-Legendre quadrature on [-a, a].

    The integrand is a polynomial times a Gaussian; the node count scales with
    the oscillation count a * sqrt(2 n_cut) and resolves it to roughly 1e-12.
    """
    if a <= 0:
        return np.zeros((n_cut, n_cut))
    if nodes is None:
        nodes = max(200, int(4 * a * math.sqrt(2 * n_cut)) + 200)
    t, w = leggauss(nodes)
    psi = hermite_functions(n_cut, a * t)
    return (psi * (a * w)) @ psi.T


def _compressed_threshold_pair(n_cut: int, z0: float) -> tuple[np.ndarray, np.ndarray]:
    """Compressions of 1{X^2 >= z0} and 1{Y^2 >= z0}.

    Y is X rotated by a quarter turn in phase space, which multiplies |n> by
    i^n; the X compression is real with parity structure, so the Y one is real
    as well.
    """
    px = np.eye(n_cut) - window_compression(n_cut, math.sqrt(z0))
    phase = 1j ** np.arange(n_cut)
    py = np.real(np.outer(phase, phase.conj()) * px)
    return px, py


def quadrature_threshold_effects(cutoff: FockCutoff, z0: float,
                                 construction: str = "compressed") -> tuple[HermitianMatrix, HermitianMatrix]:
    if construction == "compressed":
        px, py = _compressed_threshold_pair(cutoff.n_cut, z0)
        return HermitianMatrix(px), HermitianMatrix(py)
    if construction == "truncated":
        X, Y = quadratures(cutoff)
        X2 = HermitianMatrix(X.entries @ X.entries)
        Y2 = HermitianMatrix(Y.entries @ Y.entries)
        return spectral_projector(X2, z0), spectral_projector(Y2, z0)
    raise DomainError(f"construction must be 'compressed' or 'truncated', got {construction!r}")


def energy_effect(cutoff: FockCutoff, threshold: str = "quadrature") -> HermitianMatrix:
    """Diagonal effect on the high-energy Fock levels.

    ``"quadrature"``: X^2 + Y^2 >= n0 + 1, i.e. levels n with 2n + 1 >= n0 + 1.
    ``"photon"``: photon number N >= n0, the support the W-operator
    comparison actually controls.
    """
    n = np.arange(cutoff.n_cut)
    if threshold == "quadrature":
        mask = 2 * n + 1 >= cutoff.n0 + 1
    elif threshold == "photon":
        mask = n >= cutoff.n0
    else:
        raise DomainError(f"threshold must be 'quadrature' or 'photon', got {threshold!r}")
    return HermitianMatrix.diag(mask.astype(float))


def lemma2_operators(cutoff: FockCutoff, construction: str = "compressed",
                     v1_threshold: str = "quadrature") -> tuple[HermitianMatrix, HermitianMatrix]:
    """U1 = (P^{X^2 >= n0/2} + P^{Y^2 >= n0/2})/2 and V1 = P^{X^2+Y^2 >= n0+1}."""
    px, py = quadrature_threshold_effects(cutoff, cutoff.n0 / 2.0, construction)
    U1 = HermitianMatrix(0.5 * (px.entries + py.entries))
    return U1, energy_effect(cutoff, v1_threshold)


def w1_diagonal(cutoff: FockCutoff) -> np.ndarray:
    """q_n = Q(n+1, n0) for n < n_cut, nondecreasing in n."""
    # rounding can push the running sum a few ulps past 1
    return np.minimum(np.exp(log_regularized_upper_gamma_table(cutoff.n_cut, cutoff.n0)), 1.0)


def w1_operator(cutoff: FockCutoff) -> HermitianMatrix:
    return HermitianMatrix.diag(w1_diagonal(cutoff))


def coherent_state(alpha: complex, cutoff: FockCutoff, defect_tol: float = 1e-10) -> np.ndarray:
    """Truncated coherent state, renormalized; the discarded weight must be <= defect_tol."""
    alpha = complex(alpha)
    mean = abs(alpha) ** 2
    if mean > cutoff.n_cut / 4:
        raise TruncationError(f"|alpha|^2 = {mean:.4g} exceeds n_cut/4 = {cutoff.n_cut / 4:g}")
    n = np.arange(cutoff.n_cut)
    if alpha == 0:
        vec = np.zeros(cutoff.n_cut, dtype=complex)
        vec[0] = 1.0
        return vec
    log_abs = -0.5 * mean + n * math.log(abs(alpha)) - 0.5 * np.array([math.lgamma(j + 1) for j in n])
    vec = np.exp(log_abs) * np.exp(1j * n * np.angle(alpha))
    defect = 1.0 - float(np.vdot(vec, vec).real)
    if defect > defect_tol:
        raise TruncationError(f"coherent state loses weight {defect:.3e} > {defect_tol:g} at n_cut={cutoff.n_cut}")
    return vec / np.linalg.norm(vec)


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """<alpha|beta> = exp(-(|alpha|^2 + |beta|^2)/2 + conj(alpha) beta)."""
    alpha, beta = complex(alpha), complex(beta)
    return complex(np.exp(-0.5 * (abs(alpha) ** 2 + abs(beta) ** 2) + alpha.conjugate() * beta))


def w1_quadrature_check(n: int, n0: float, tol: float = 1e-8) -> tuple[float, float]:
    """Radial integral of |<n|alpha>|^2 over |alpha|^2 >= n0, next to q_n.

    With t = |alpha|^2 the phase-space integral (1/pi) int d^2 alpha reduces to
    int_{n0}^inf e^{-t} t^n / n! dt, evaluated by adaptive quadrature with the
    integrand formed in log space and split at its peak t = n.
    """
    if not 0 <= n <= 200:
        raise DomainError(f"n must lie in [0, 200], got {n}")
    if n0 < 0:
        raise DomainError(f"n0 must be non-negative, got {n0}")
    lg = math.lgamma(n + 1)

    def f(t):
        if t == 0.0:
            return 1.0 if n == 0 else 0.0
        return math.exp(n * math.log(t) - t - lg)

    pieces = []
    lo = float(n0)
    if n > lo:
        pieces.append((lo, float(n)))
        lo = float(n)
    # the integrand has decayed below 1e-300 relative well before this point
    hi = lo + 60.0 + 12.0 * math.sqrt(n + 1) + 800.0
    pieces.append((lo, hi))
    total, err = 0.0, 0.0
    for a, b in pieces:
        val, e = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=400)
        total += val
        err += e
    if err > tol:
        raise NumericalError(f"quadrature error estimate {err:.3e} exceeds {tol:g}",
                             state={"n": n, "n0": n0, "integral": total, "error": err})
    return total, regularized_upper_gamma(n, float(n0))
