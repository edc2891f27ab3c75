"""
Polynomials of the interlacing family.

A node of the family is an ordered prefix (s_1, ..., s_i) of chosen indices.
Its polynomial is the expected characteristic polynomial of
sum_{j<=k} u_j u_j^T given u_1 = w_{s_1}, ..., u_i = w_{s_i}, where the
remaining k - i draws are i.i.d. with P(u = w_j) = x(j) / k.

Because the free draws are i.i.d. with mean M/k, the multilinear expectation
collapses onto the diagonal s = z_1 + ... + z_{k-i}:

    f_node(x) = sum_r (-1)^r C(k-i, r) d^r/ds^r Q(x, s) |_{s=0},
    Q(x, s)   = det(x I - A + s M / k).

Q is recovered from its values at Chebyshev nodes in s; for fixed s the pencil
A - s M / k is symmetric, so each slice is an exact characteristic polynomial.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import conf
from .exceptions import InvalidInstance, NotDivisible, NumericalFailure
from .linalg import SymMatrix, char_poly, eigenvalues, gram
from .poly import RealRootedPoly, apply_shift_op

logger = logging.getLogger(__name__)

VANDERMONDE_COND_LIMIT = 1e12
EXACT_BINOMIAL_LIMIT = 60


@dataclass(frozen=True, eq=False)
class FamilyContext:
    """
    Vectors, fractional weights and the sampling law of one interlacing family.

    ``scale`` is the factor applied to the vectors so that tr(M) = d; every
    family polynomial of the scaled vectors has its roots multiplied by
    scale**2 relative to the unscaled ones.
    """
    vectors: np.ndarray
    x: np.ndarray
    k: int
    M: SymMatrix
    probabilities: np.ndarray
    scale: float = 1.0

    @classmethod
    def build(cls, vectors, x, k, normalize_trace=True):
        vectors = np.array(vectors, dtype=float)
        x = np.array(x, dtype=float)
        if vectors.ndim != 2 or x.shape != (vectors.shape[0],):
            raise InvalidInstance(f"{x.shape} weights for vectors of shape {vectors.shape}")
        if k < 1:
            raise InvalidInstance(f"Budget must be positive, got {k}")
        total = x.sum()
        if np.any(x < 0) or abs(total - k) > 1e-9 * k:
            raise InvalidInstance(f"Weights must be nonnegative and sum to k={k}, got {total!r}")
        x = x * (k / total)
        scale = 1.0
        M = gram(x, vectors)
        d = vectors.shape[1]
        if normalize_trace and M.trace() > 0:
            scale = math.sqrt(d / M.trace())
            vectors = vectors * scale
            M = gram(x, vectors)
        vectors.flags.writeable = False
        x.flags.writeable = False
        probabilities = x / k
        probabilities.flags.writeable = False
        return cls(vectors, x, int(k), M, probabilities, scale)

    @property
    def d(self):
        return self.vectors.shape[1]

    @property
    def m(self):
        return self.vectors.shape[0]


@dataclass(frozen=True, eq=False)
class PartialSelection:
    """A tree node: the ordered prefix of chosen indices and A = sum of their outer products."""
    prefix: tuple
    A: SymMatrix = field(repr=False)

    @classmethod
    def root(cls, d):
        return cls((), SymMatrix.zeros(d))

    @classmethod
    def from_prefix(cls, ctx, prefix):
        prefix = tuple(int(t) for t in prefix)
        if len(prefix) > ctx.k:
            raise InvalidInstance(f"Prefix of length {len(prefix)} exceeds budget {ctx.k}")
        counts = np.bincount(np.asarray(prefix, dtype=int), minlength=ctx.m) if prefix else np.zeros(ctx.m)
        return cls(prefix, gram(counts, ctx.vectors))

    def extend(self, ctx, t):
        v = ctx.vectors[t]
        return PartialSelection(self.prefix + (int(t),), SymMatrix(self.A.entries + np.outer(v, v)))

    @property
    def level(self):
        return len(self.prefix)

    def is_consistent(self, ctx, tol=1e-10):
        expected = PartialSelection.from_prefix(ctx, self.prefix).A
        return np.max(np.abs(expected.entries - self.A.entries)) <= tol * (1.0 + expected.max_abs())


def _shifted_power(eigs, k):
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    p = RealRootedPoly(coeffs)
    for lam in eigs:
        p = apply_shift_op(p, lam / k)
    return p


def root_poly_closed_form(eigs, k, d):
    """x^{d-k} prod_i (1 - (lambda_i/k) d/dx) x^k, monic of degree d."""
    eigs = np.asarray(eigs, dtype=float)
    if k < d:
        raise InvalidInstance(f"Budget k={k} is below the dimension d={d}")
    if eigs.shape != (d,):
        raise InvalidInstance(f"Expected {d} eigenvalues, got {eigs.shape}")
    p = _shifted_power(eigs, k)
    low = np.asarray(p.coeffs[:k - d])
    scale = max(1.0, float(np.max(np.abs(p.coeffs))))
    if low.size and np.max(np.abs(low)) > 1e-8 * scale:
        raise NotDivisible(f"Low-order coefficients {low!r} do not vanish")
    return RealRootedPoly(p.coeffs[k - d:])


def normalized_root_poly(k, d, exact=False):
    """(1 - (1/k) d/dx)^k x^d."""
    if not k >= d >= 1:
        raise InvalidInstance(f"Need k >= d >= 1, got k={k}, d={d}")
    p = RealRootedPoly.monomial(d, exact=exact)
    lam = Fraction(1, k) if exact else 1.0 / k
    for _ in range(k):
        p = apply_shift_op(p, lam)
    return p


def root_poly_expansion(k, d):
    """sum_i (-1)^i C(d,i) C(k,i) i!/k^i x^{d-i}, exactly."""
    coeffs = [Fraction(0)] * (d + 1)
    for i in range(d + 1):
        coeffs[d - i] = Fraction((-1) ** i * math.comb(d, i) * math.comb(k, i) * math.factorial(i), k ** i)
    return RealRootedPoly.exact(coeffs)


def shifted_root_poly_exact(k, d):
    """x^{d-k} (1 - (1/k) d/dx)^d x^k, exactly."""
    p = RealRootedPoly.monomial(k, exact=True)
    for _ in range(d):
        p = apply_shift_op(p, Fraction(1, k))
    if any(c != 0 for c in p.coeffs[:k - d]):
        raise NotDivisible("x^{k-d} does not divide the shifted power")
    return RealRootedPoly.exact(p.coeffs[k - d:])


def e_design_root_bound(k, d):
    """Lower bound (1 - sqrt((d-1)/k))^2 on the minimum root of the normalized root polynomial."""
    return (1.0 - math.sqrt((d - 1) / k)) ** 2


def optimal_alpha(k, d):
    """The soft-min parameter that makes the alpha-min argument give the bound above (d >= 2)."""
    return (math.sqrt((d - 1) * k) - (d - 1)) / ((d - 1) * k)


def falling_ratio(n, r, k):
    """n! / ((n - r)! k^r), exactly for small budgets and through log-gamma otherwise."""
    if k <= EXACT_BINOMIAL_LIMIT:
        return math.perm(n, r) / k ** r
    return math.exp(math.lgamma(n + 1) - math.lgamma(n - r + 1) - r * math.log(k))


@lru_cache(maxsize=None)
def _chebyshev_system(d):
    t = np.cos(np.pi * (2 * np.arange(d + 1) + 1) / (2 * (d + 1)))
    V = np.vander(t, d + 1, increasing=True)
    cond = np.linalg.cond(V)
    return t, V, cond


def conditional_expected_charpoly(ctx, node):
    i = node.level
    k, d = ctx.k, ctx.d
    if i > k:
        raise InvalidInstance(f"Node at level {i} is below the leaves (k={k})")
    if i == k:
        return char_poly(node.A)
    n = k - i
    t, V, cond = _chebyshev_system(d)
    if cond > VANDERMONDE_COND_LIMIT:
        raise NumericalFailure(f"Interpolation system too ill-conditioned (cond={cond:.2e})")
    # s ranges over [-k, k]; M/k has trace d/k, so s M/k stays O(d).
    B = ctx.M.entries / k
    A = node.A.entries
    slices = np.empty((d + 1, d + 1))
    for j, tj in enumerate(t):
        s = k * tj
        slices[j] = char_poly(SymMatrix(A - s * B)).coeffs
    # G[r] holds the x-coefficients of the (s/k)^r term of Q(x, s)
    G = np.linalg.solve(V, slices)
    coeffs = np.zeros(d + 1)
    for r in range(min(d, n) + 1):
        # (-1)^r C(n, r) r! q_r with q_r = G[r] / k^r
        coeffs += (-1) ** r * falling_ratio(n, r, k) * G[r]
    coeffs[d] = 1.0
    return RealRootedPoly(coeffs)


def children_weights(ctx):
    return np.array(ctx.probabilities)


def children_polys(ctx, node, workers=None):
    """The m child polynomials of ``node`` in index order."""
    if workers is None:
        workers = conf.get("WORKERS")
    children = [node.extend(ctx, t) for t in range(ctx.m)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda child: conditional_expected_charpoly(ctx, child), children))
    return [conditional_expected_charpoly(ctx, child) for child in children]


def root_eigenvalues(ctx):
    """Eigenvalues of M, the fractional Gram matrix of the (scaled) family vectors."""
    return eigenvalues(ctx.M)
