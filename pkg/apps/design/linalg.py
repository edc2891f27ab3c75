"""
Dense symmetric linear algebra for small dimension d.

Matrices are stored dense; eigendecompositions go through LAPACK's symmetric
driver (tridiagonal reduction followed by an implicit iteration), which is
deterministic for identical input.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.polynomial.polynomial as npoly

from . import conf
from .exceptions import InvalidInstance, NumericalFailure, RankDeficient, SingularMatrix
from .poly import RealRootedPoly

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A real symmetric d x d matrix. Symmetry is enforced by averaging."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise InvalidInstance(f"Expected a non-empty square matrix, got shape {entries.shape}")
        entries = 0.5 * (entries + entries.T)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros((dim, dim)))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    def __add__(self, other):
        return SymMatrix(self.entries + other.entries)

    def __sub__(self, other):
        return SymMatrix(self.entries - other.entries)

    def scaled(self, factor):
        return SymMatrix(factor * self.entries)

    def trace(self):
        return float(np.trace(self.entries))

    def max_abs(self):
        return float(np.max(np.abs(self.entries)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in ascending order with orthonormal eigenvectors as columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    @property
    def lambda_min(self):
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self):
        return float(self.eigenvalues[-1])


def gram(weights, vectors):
    """Return sum_i weights[i] * v_i v_i^T for the rows v_i of ``vectors``."""
    weights = np.asarray(weights, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise InvalidInstance(f"Vectors must form an m x d array, got shape {vectors.shape}")
    if weights.ndim != 1 or weights.shape[0] != vectors.shape[0]:
        raise InvalidInstance(
            f"{weights.shape[0] if weights.ndim == 1 else weights.shape} weights "
            f"for {vectors.shape[0]} vectors"
        )
    return SymMatrix((vectors.T * weights) @ vectors)


def sym_eigen(M):
    entries = M.entries
    if not np.all(np.isfinite(entries)):
        raise NumericalFailure("Matrix has non-finite entries")
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Symmetric eigensolver did not converge: {exc}") from exc
    return Spectrum(eigenvalues, eigenvectors)


def eigenvalues(M):
    """Ascending eigenvalues only."""
    try:
        return np.linalg.eigvalsh(M.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Symmetric eigensolver did not converge: {exc}") from exc


def lambda_min(M):
    return float(eigenvalues(M)[0])


def char_poly(M):
    """det(x I - M) as a monic RealRootedPoly, built from the spectrum."""
    return RealRootedPoly(npoly.polyfromroots(eigenvalues(M)))


def char_poly_exact(rows):
    """
    Characteristic polynomial of a rational matrix by Faddeev-LeVerrier.

    ``rows`` is a square list of lists of Fractions (or ints). Returns ascending
    Fraction coefficients of det(x I - M).
    """
    n = len(rows)
    M = [[Fraction(v) for v in row] for row in rows]
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    # N_k = M (N_{k-1} + c_{n-k+1} I), c_{n-k} = -tr(N_k)/k
    N = [[Fraction(0)] * n for _ in range(n)]
    for step in range(1, n + 1):
        prev = [row[:] for row in N]
        for i in range(n):
            prev[i][i] += coeffs[n - step + 1]
        N = [[sum(M[i][t] * prev[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs[n - step] = -sum(N[i][i] for i in range(n)) / step
    return coeffs


def inv_sqrt(M, rel_cutoff=None):
    """X^{-1/2} for positive definite M; RankDeficient when M is (numerically) singular."""
    if rel_cutoff is None:
        rel_cutoff = conf.get("REL_CUTOFF")
    spectrum = sym_eigen(M)
    lam = spectrum.eigenvalues
    top = lam[-1]
    if top <= 0 or lam[0] <= rel_cutoff * top:
        raise RankDeficient(
            f"Matrix is rank deficient: lambda_min={lam[0]:.3e}, lambda_max={top:.3e}"
        )
    Q = spectrum.eigenvectors
    return SymMatrix((Q / np.sqrt(lam)) @ Q.T)


def det(M):
    return float(np.linalg.det(M.entries))


def trace_inverse(M):
    lam = eigenvalues(M)
    if lam[0] <= conf.get("SINGULAR_CUTOFF") * max(lam[-1], 0.0) or lam[-1] <= 0:
        raise SingularMatrix(f"Matrix is singular: lambda_min={lam[0]:.3e}")
    return float(np.sum(1.0 / lam))


def elementary_symmetric(values):
    """
    E_0..E_n of ``values`` via the product recurrence of prod (1 + t * v_j).

    For nonnegative values every partial sum is nonnegative, so there is no
    cancellation.
    """
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for count, v in enumerate(values, start=1):
        e[1:count + 1] = e[1:count + 1] + v * e[:count]
    return e
