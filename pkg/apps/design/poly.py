"""
Dense univariate polynomials with ascending coefficients.

Besides evaluation and differentiation this module carries the (1 - lambda d/dx)
operator calculus and the root routines the rounding algorithm relies on:
Newton iteration from below for the minimum root of a real-rooted polynomial
and the soft minimum alpha_min(p) = lambda_min(p + alpha p').

Coefficient arrays are float64, or Python objects (Fractions) for exact work.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.polynomial.polynomial as npoly

from . import conf
from .exceptions import DegreeMismatch, NumericalFailure, WeightSumError

logger = logging.getLogger(__name__)

MAX_NEWTON_STEPS = 100_000


@dataclass(frozen=True, eq=False)
class RealRootedPoly:
    """Polynomial sum_j coeffs[j] x^j; trailing zeros are trimmed on construction."""
    coeffs: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.coeffs)
        if raw.dtype == object:
            coeffs = np.array([Fraction(c) for c in raw.ravel()], dtype=object)
        else:
            coeffs = np.array(raw, dtype=float).ravel()
        if coeffs.size == 0:
            coeffs = np.zeros(1, dtype=coeffs.dtype)
        last = coeffs.size
        while last > 1 and coeffs[last - 1] == 0:
            last -= 1
        coeffs = coeffs[:last].copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def exact(cls, coeffs):
        return cls(np.array([Fraction(c) for c in coeffs], dtype=object))

    @classmethod
    def from_roots(cls, roots):
        return cls(npoly.polyfromroots(np.asarray(roots, dtype=float)))

    @classmethod
    def monomial(cls, degree, exact=False):
        coeffs = [0] * degree + [1]
        return cls.exact(coeffs) if exact else cls(np.array(coeffs, dtype=float))

    @property
    def degree(self):
        return self.coeffs.size - 1

    @property
    def is_exact(self):
        return self.coeffs.dtype == object

    @property
    def leading(self):
        return self.coeffs[-1]

    def is_monic(self, tol=0.0):
        return abs(self.leading - 1) <= tol

    def coefficient(self, power):
        if 0 <= power <= self.degree:
            return self.coeffs[power]
        return Fraction(0) if self.is_exact else 0.0

    def as_float(self):
        return RealRootedPoly(np.asarray(self.coeffs, dtype=float))

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        return f"RealRootedPoly({list(self.coeffs)!r})"


@dataclass(frozen=True)
class SoftMinParams:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


def evaluate(p, x):
    """Horner evaluation."""
    return npoly.polyval(x, p.coeffs)


def derivative(p, order=1):
    """Exact coefficient shift-scale; order beyond the degree gives the zero polynomial."""
    if order < 0:
        raise ValueError("Derivative order must be nonnegative")
    if order == 0:
        return p
    n = p.degree + 1
    if order >= n:
        return RealRootedPoly(p.coeffs[:1] * 0)
    factors = [math.perm(j + order, order) for j in range(n - order)]
    factors = np.array(factors, dtype=object if p.is_exact else float)
    return RealRootedPoly(p.coeffs[order:] * factors)


def apply_shift_op(p, lam):
    """(1 - lam d/dx) p; same degree, monic polynomials stay monic."""
    result = p.coeffs.copy()
    der = derivative(p, 1).coeffs
    if p.degree >= 1:
        result[:der.size] = result[:der.size] - lam * der
    return RealRootedPoly(result)


def convex_combination(polys, weights):
    polys = list(polys)
    if not polys:
        raise DegreeMismatch("Cannot combine an empty list of polynomials")
    degree = polys[0].degree
    if any(p.degree != degree for p in polys):
        raise DegreeMismatch(f"Degrees differ: {[p.degree for p in polys]}")
    if len(weights) != len(polys):
        raise WeightSumError(f"{len(weights)} weights for {len(polys)} polynomials")
    exact = all(p.is_exact for p in polys) and all(isinstance(w, (int, Fraction)) for w in weights)
    if exact:
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise WeightSumError(f"Weights must be nonnegative and sum to 1, got {weights}")
        total = np.zeros(degree + 1, dtype=object) + Fraction(0)
        for w, p in zip(weights, polys):
            total = total + Fraction(w) * p.coeffs
        return RealRootedPoly(total)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise WeightSumError(f"Weights must be nonnegative and sum to 1, got sum {w.sum()!r}")
    stacked = np.array([np.asarray(p.coeffs, dtype=float) for p in polys])
    return RealRootedPoly(w @ stacked)


def min_root(p, eps=None):
    """
    Minimum root of a real-rooted polynomial by Newton iteration from below.

    Left of every root the Newton step -p/p' = 1 / sum_i 1/(r_i - x) is positive
    and never passes r_min, so the iterates increase monotonically. A step of
    size s leaves at most (degree - 1) * s to go, hence the eps / degree stop.
    """
    if eps is None:
        eps = conf.get("ROOT_EPS")
    c = np.asarray(p.coeffs, dtype=float)
    n = c.size - 1
    if n < 1:
        raise NumericalFailure("A constant polynomial has no roots")
    dc = npoly.polyder(c)
    magnitudes = np.abs(c)
    x = -(1.0 + np.sum(magnitudes[:-1]) / magnitudes[-1])
    stop = eps / n
    for _ in range(MAX_NEWTON_STEPS):
        fx = npoly.polyval(x, c)
        if fx == 0:
            return float(x)
        dfx = npoly.polyval(x, dc)
        if dfx == 0 or not np.isfinite(dfx):
            raise NumericalFailure(f"Newton iteration stalled at x={x!r}")
        step = -fx / dfx
        # rounding error of Horner's rule, carried into the step
        noise = 2 * n * np.finfo(float).eps * npoly.polyval(abs(x), magnitudes) / abs(dfx)
        if step < 0:
            if -step > max(eps, 10 * noise):
                raise NumericalFailure(
                    f"Newton iteration turned back by {step:.3e} at x={x!r}; "
                    "polynomial is not real-rooted or is badly conditioned"
                )
            return float(x)
        x += step
        if step < stop or step <= noise:
            return float(x)
    raise NumericalFailure(f"Newton iteration did not converge in {MAX_NEWTON_STEPS} steps")


def alpha_min(p, params, eps=None):
    """lambda_min(p + alpha p'), a soft minimum lying at least alpha below lambda_min(p)."""
    return min_root(apply_shift_op(p.as_float(), -params.alpha), eps)


def real_roots(p, eps=None):
    """All roots, ascending, by repeated min_root and deflation."""
    roots = []
    q = p.as_float()
    while q.degree >= 1:
        r = min_root(q, eps)
        roots.append(r)
        quotient, _ = npoly.polydiv(q.coeffs, np.array([-r, 1.0]))
        q = RealRootedPoly(quotient)
    return np.array(roots)


def coefficient_distance(p, q):
    """max_j |p_j - q_j| over zero-padded coefficient vectors."""
    n = max(p.coeffs.size, q.coeffs.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[:p.coeffs.size] = np.asarray(p.coeffs, dtype=float)
    b[:q.coeffs.size] = np.asarray(q.coeffs, dtype=float)
    return float(np.max(np.abs(a - b)))
