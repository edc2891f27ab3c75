"""
Convex relaxations of the design problems.

Every objective is kept in minimization form: det(X)^{-1/d} for D, tr(X^{-1})
for A, 1/lambda_min(X) for E and (E_l'(X) / E_l(X))^{1/(l-l')} for the
generalized ratio. The solvers run on simplex weights w (sum 1); the reported
solution is x = k * w, so the budget constraint is always tight.

D and A use their classical multiplicative updates interleaved with an
exchange (toward / away) step, the ratio objective uses Frank-Wolfe with away
steps, and E is solved as a semidefinite program with cvxopt, or by Newton
ascent on a soft-min with a shrinking temperature when E_SOLVER is "smoothed"
or the semidefinite solver is unavailable or fails.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize_scalar

from . import conf
from .exceptions import (
    Infeasible,
    InvalidInstance,
    IterationLimit,
    NegativeWeight,
    NumericalFailure,
    SingularMatrix,
    ZeroSum,
)
from .linalg import SymMatrix, eigenvalues, elementary_symmetric, gram, sym_eigen, trace_inverse

logger = logging.getLogger(__name__)

# cvxopt stalls or divides by zero when asked for tolerances near machine precision
SDP_ABSTOL = 1e-9
SDP_RELTOL = 1e-8
SDP_FEASTOL = 1e-9

# smoothed E solver: Newton steps per temperature and the temperature cut
CENTERING_STEPS = 50
MU_FACTOR = 0.25


class ObjectiveTag(str, Enum):
    D = "D"
    A = "A"
    E = "E"
    RATIO = "ratio"


@dataclass(frozen=True)
class ObjectiveKind:
    tag: ObjectiveTag
    l_prime: int = None
    l: int = None

    @classmethod
    def ratio(cls, l_prime, l):
        return cls(ObjectiveTag.RATIO, int(l_prime), int(l))

    @classmethod
    def parse(cls, name, l_prime=None, l=None):
        """Build a kind from its command-line name (D, A, E or ratio)."""
        key = str(name).strip()
        if key.lower() == "ratio":
            if l_prime is None or l is None:
                raise InvalidInstance("The ratio objective needs both l_prime and l")
            return cls.ratio(l_prime, l)
        try:
            return cls(ObjectiveTag(key.upper()))
        except ValueError:
            raise InvalidInstance(f"Unknown objective {name!r}; expected D, A, E or ratio")

    def validate(self, d):
        if self.tag is ObjectiveTag.RATIO and not 0 <= self.l_prime < self.l <= d:
            raise InvalidInstance(f"Need 0 <= l_prime < l <= d={d}, got ({self.l_prime}, {self.l})")
        return self

    @property
    def is_ratio(self):
        return self.tag is ObjectiveTag.RATIO

    @property
    def maximizes_score(self):
        """Node scores are maximized for E and D and minimized for A and the ratio."""
        return self.tag in (ObjectiveTag.E, ObjectiveTag.D)

    def orders(self, d):
        """The (l', l) pair this objective is a ratio of; None for E."""
        if self.tag is ObjectiveTag.D:
            return 0, d
        if self.tag is ObjectiveTag.A:
            return d - 1, d
        if self.tag is ObjectiveTag.RATIO:
            return self.l_prime, self.l
        return None

    def needs_full_rank(self, d):
        return not self.is_ratio or self.l == d

    def as_dict(self):
        data = {"tag": self.tag.value}
        if self.is_ratio:
            data.update(l_prime=self.l_prime, l=self.l)
        return data

    def __str__(self):
        if self.is_ratio:
            return f"ratio({self.l_prime},{self.l})"
        return self.tag.value


D_DESIGN = ObjectiveKind(ObjectiveTag.D)
A_DESIGN = ObjectiveKind(ObjectiveTag.A)
E_DESIGN = ObjectiveKind(ObjectiveTag.E)


@dataclass(frozen=True, eq=False)
class Instance:
    """m vectors in R^d (the rows of ``vectors``) and an integer budget k >= d."""
    vectors: np.ndarray
    k: int

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise InvalidInstance(f"Vectors must form a non-empty m x d array, got shape {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise InvalidInstance("Vectors contain non-finite entries")
        if int(self.k) != self.k or self.k < vectors.shape[1]:
            raise InvalidInstance(f"Budget k={self.k} must be an integer of at least d={vectors.shape[1]}")
        vectors.flags.writeable = False
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "k", int(self.k))

    @property
    def d(self):
        return self.vectors.shape[1]

    @property
    def m(self):
        return self.vectors.shape[0]

    def gram(self, x):
        return gram(x, self.vectors)


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    x: np.ndarray
    X: SymMatrix
    objective_value: float
    objective_kind: ObjectiveKind
    certified: bool = False
    certificate: dict = field(default_factory=dict)
    iterations: int = 0

    def as_dict(self):
        return {
            "x": [float(v) for v in self.x],
            "objective": self.objective_kind.as_dict(),
            "objective_value": float(self.objective_value),
            "certified": bool(self.certified),
            "certificate": dict(self.certificate),
            "iterations": int(self.iterations),
        }


def fractional_objective(X, kind):
    lam = eigenvalues(X)
    d = lam.size
    top = max(float(lam[-1]), 0.0)
    floor = conf.get("SINGULAR_CUTOFF") * top
    degenerate = top <= 0 or lam[0] <= floor
    if kind.tag is ObjectiveTag.E:
        return math.inf if degenerate else 1.0 / float(lam[0])
    if kind.tag is ObjectiveTag.D:
        if degenerate:
            raise SingularMatrix(f"D objective of a singular matrix (lambda_min={lam[0]:.3e})")
        return math.exp(-float(np.mean(np.log(lam))))
    if kind.tag is ObjectiveTag.A:
        return trace_inverse(X)
    lp, l = kind.orders(d)
    e = elementary_symmetric(np.clip(lam, 0.0, None))
    if (l == d and degenerate) or e[l] <= conf.get("SINGULAR_CUTOFF") * math.comb(d, l) * top ** l:
        raise SingularMatrix(f"E_{l} vanishes; the ratio objective is undefined")
    return float((e[lp] / e[l]) ** (1.0 / (l - lp)))


def matrix_objective(X, kind):
    """fractional_objective with +inf in place of SingularMatrix, for integral solutions."""
    try:
        return fractional_objective(X, kind)
    except SingularMatrix:
        return math.inf


def validate_fractional(inst, x, kind):
    """Check a supplied fractional solution and rescale it to sum k."""
    kind.validate(inst.d)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (inst.m,):
        raise InvalidInstance(f"Expected {inst.m} weights, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidInstance("Weights contain non-finite entries")
    if np.any(x < 0):
        raise NegativeWeight(f"Weights must be nonnegative, got min {x.min()!r}")
    total = float(x.sum())
    if total <= 0:
        raise ZeroSum("Weights sum to zero")
    return _finish(inst, x * (inst.k / total), kind, iterations=0)


def solve_relaxation(inst, kind, tol=None, max_iters=None, callback=None, strict=False, solver=None):
    """
    Solve the relaxation of ``kind`` over {x >= 0, sum x = k}.

    ``callback(iteration, x, X)`` is called with the iterate at the start of
    every iteration. When the iteration budget runs out the best iterate is
    returned with ``certified=False``, or IterationLimit is raised if
    ``strict``.
    """
    tol = conf.get("TOL") if tol is None else tol
    max_iters = conf.get("MAX_ITERS") if max_iters is None else max_iters
    if not tol > 0:
        raise InvalidInstance(f"Tolerance must be positive, got {tol}")
    kind.validate(inst.d)
    _check_feasible(inst, kind)

    # The objectives are homogeneous, so the solvers run on rescaled vectors.
    data_scale = math.sqrt(inst.d / max(np.sum(inst.vectors ** 2) / inst.m, np.finfo(float).tiny))
    V = inst.vectors * data_scale
    report = _iterate_reporter(callback, inst)
    dual = None
    if kind.tag is ObjectiveTag.E:
        solver = solver or conf.get("E_SOLVER")
        result = _solve_e_sdp(V, tol, max_iters) if solver == "sdp" else None
        if result is None:
            result = _solve_e_smoothed(V, tol, max_iters, report, inst.k)
        w, iterations, dual = result
    elif kind.tag is ObjectiveTag.D:
        w, iterations = _solve_d(V, tol, max_iters, report, inst.k)
    elif kind.tag is ObjectiveTag.A:
        w, iterations = _solve_a(V, tol, max_iters, report, inst.k)
    else:
        w, iterations = _solve_ratio(V, kind.l_prime, kind.l, tol, max_iters, report, inst.k)

    solution = _finish(inst, inst.k * w, kind, iterations, tol=tol, dual=dual)
    if not solution.certified:
        message = f"{kind} relaxation not certified after {iterations} iterations: {solution.certificate}"
        if strict:
            raise IterationLimit(message, solution)
        logger.warning(message)
    else:
        logger.debug("%s relaxation certified in %d iterations", kind, iterations)
    return solution


def _iterate_reporter(callback, inst):
    if callback is None:
        return None

    def report(iteration, w):
        x = inst.k * w
        callback(iteration, x, inst.gram(x))

    return report


def _check_feasible(inst, kind):
    lam = eigenvalues(inst.gram(np.full(inst.m, inst.k / inst.m)))
    top = float(lam[-1])
    rank = int(np.sum(lam > conf.get("REL_CUTOFF") * top)) if top > 0 else 0
    needed = inst.d if kind.needs_full_rank(inst.d) else kind.l
    if rank < needed:
        raise Infeasible(f"The vectors span a space of dimension {rank}; {kind} needs {needed}")


def _finish(inst, x, kind, iterations, tol=None, dual=None):
    tol = conf.get("TOL") if tol is None else tol
    x = np.array(x, dtype=float)
    x.flags.writeable = False
    X = inst.gram(x)
    value = matrix_objective(X, kind)
    certified, certificate = _certificate(inst, x, X, kind, tol, dual)
    return FractionalSolution(x, X, value, kind, certified, certificate, iterations)


def _certificate(inst, x, X, kind, tol, dual=None):
    """First-order optimality certificate of x, in the original scale."""
    k, d, V = inst.k, inst.d, inst.vectors
    spectrum = sym_eigen(X)
    lam, Q = spectrum.eigenvalues, spectrum.eigenvectors
    top = max(float(lam[-1]), 0.0)
    singular = top <= 0 or lam[0] <= conf.get("SINGULAR_CUTOFF") * top
    if kind.tag is ObjectiveTag.E:
        if dual is None:
            q = Q[:, 0]
            dual = np.outer(q, q)
        upper = k * float(np.max(np.einsum("ij,jk,ik->i", V, dual, V)))
        lower = float(lam[0])
        gap = (upper - lower) / lower if lower > 0 else math.inf
        return gap <= tol, {"lambda_min": lower, "dual_bound": upper, "relative_gap": gap}
    if kind.needs_full_rank(d) and singular:
        return False, {"singular": True}
    if kind.tag is ObjectiveTag.D:
        leverage = float(np.max(np.einsum("ij,jk,ik->i", V, np.linalg.inv(X.entries), V)))
        threshold = d / k
        return leverage <= threshold * (1 + tol), {
            "max_leverage": leverage, "threshold": threshold, "relative_gap": leverage / threshold - 1.0,
        }
    if kind.tag is ObjectiveTag.A:
        Xinv = np.linalg.inv(X.entries)
        h = float(np.max(np.sum((V @ Xinv) ** 2, axis=1)))
        threshold = float(np.trace(Xinv)) / k
        return h <= threshold * (1 + tol), {
            "max_weighted_leverage": h, "threshold": threshold, "relative_gap": h / threshold - 1.0,
        }
    grad = _ratio_gradient(V, lam, Q, kind.l_prime, kind.l)
    # sum_i x_i grad_i = -1 by Euler's identity; in simplex coordinates the gap is -1 - k min grad.
    fw_gap = float(-1.0 - k * np.min(grad))
    return fw_gap <= tol, {"frank_wolfe_gap": fw_gap}


def _gram(V, w):
    return (V.T * w) @ V


def _inverse(X):
    try:
        return np.linalg.inv(X)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Relaxation iterate became singular: {exc}") from exc


def _exchange_step(w, grad, line_value):
    """
    One toward or away step along a vertex of the simplex.

    ``grad`` is the gradient of the minimized objective in w and
    ``line_value(j, a, b)`` its value at a * X + b * v_j v_j^T. Returns the new
    weights, or None when the line search finds no improvement.
    """
    inner = float(w @ grad)
    toward = int(np.argmin(grad))
    support = np.flatnonzero(w > 0)
    away = int(support[np.argmax(grad[support])])
    if inner - grad[toward] >= grad[away] - inner or w[away] >= 1.0:
        j, sign, upper = toward, 1.0, 1.0
    else:
        j, sign, upper = away, -1.0, w[away] / (1.0 - w[away])

    def along(alpha):
        return line_value(j, 1.0 - sign * alpha, sign * alpha)

    res = minimize_scalar(along, bounds=(0.0, upper), method="bounded",
                          options={"xatol": 1e-12 * upper, "maxiter": 500})
    alpha, best = float(res.x), float(res.fun)
    # bounded search never evaluates the endpoint; a full away step drops the vertex
    if sign < 0 and along(upper) <= best:
        alpha, best = upper, along(upper)
    if not best < line_value(j, 1.0, 0.0):
        return None
    new = (1.0 - sign * alpha) * w
    new[j] += sign * alpha
    if sign < 0 and alpha == upper:
        new[j] = 0.0
    new = np.clip(new, 0.0, None)
    return new / new.sum()


def _solve_d(V, tol, max_iters, report, k):
    m, d = V.shape
    w = np.full(m, 1.0 / m)
    for iteration in range(max_iters):
        if report:
            report(iteration, w)
        g = np.einsum("ij,jk,ik->i", V, _inverse(_gram(V, w)), V)
        if g.max() <= d * (1 + tol):
            return w, iteration
        w = w * g / d
        w = w / w.sum()
        g = np.einsum("ij,jk,ik->i", V, _inverse(_gram(V, w)), V)

        def line_value(j, a, b):
            z = 1.0 + (b / a) * g[j] if a > 0 else -1.0
            if z <= 0:
                return math.inf
            return -(d * math.log(a) + math.log(z))

        stepped = _exchange_step(w, -g, line_value)
        if stepped is not None:
            w = stepped
    return w, max_iters


def _solve_a(V, tol, max_iters, report, k):
    m, d = V.shape
    w = np.full(m, 1.0 / m)

    def moments(w):
        Xinv = _inverse(_gram(V, w))
        H = V @ Xinv
        return np.sum(H * V, axis=1), np.sum(H * H, axis=1), float(np.trace(Xinv))

    for iteration in range(max_iters):
        if report:
            report(iteration, w)
        g, h, t = moments(w)
        if h.max() <= t * (1 + tol):
            return w, iteration
        w = w * np.sqrt(h / t)
        w = w / w.sum()
        g, h, t = moments(w)

        def line_value(j, a, b):
            if a <= 0:
                return math.inf
            c = b / a
            z = 1.0 + c * g[j]
            if z <= 0:
                return math.inf
            return (t - c * h[j] / z) / a

        stepped = _exchange_step(w, -h, line_value)
        if stepped is not None:
            w = stepped
    return w, max_iters


def _esp_derivatives(lam, order):
    """dE_order/dlambda_j = E_{order-1} of the eigenvalues without lambda_j."""
    if order == 0:
        return np.zeros(lam.size)
    return np.array([elementary_symmetric(np.delete(lam, j))[order - 1] for j in range(lam.size)])


def _ratio_gradient(V, lam, Q, lp, l):
    """Gradient in the weights of (log E_l' - log E_l) / (l - l')."""
    lam = np.clip(lam, 0.0, None)
    e = elementary_symmetric(lam)
    P = (V @ Q) ** 2
    num = P @ _esp_derivatives(lam, lp) / e[lp]
    den = P @ _esp_derivatives(lam, l) / e[l]
    return (num - den) / (l - lp)


def _ratio_log(lam, lp, l):
    e = elementary_symmetric(np.clip(lam, 0.0, None))
    if e[l] <= 0:
        return math.inf
    return (math.log(e[lp]) - math.log(e[l])) / (l - lp)


def _solve_ratio(V, lp, l, tol, max_iters, report, k):
    m, d = V.shape
    w = np.full(m, 1.0 / m)
    for iteration in range(max_iters):
        if report:
            report(iteration, w)
        X = _gram(V, w)
        spectrum = sym_eigen(SymMatrix(X))
        grad = _ratio_gradient(V, spectrum.eigenvalues, spectrum.eigenvectors, lp, l)
        if float(w @ grad - grad.min()) <= tol:
            return w, iteration

        def line_value(j, a, b):
            if a <= 0:
                return math.inf
            return _ratio_log(np.linalg.eigvalsh(a * X + b * np.outer(V[j], V[j])), lp, l)

        stepped = _exchange_step(w, grad, line_value)
        if stepped is None:
            logger.debug("ratio line search stalled at iteration %d", iteration)
            return w, iteration
        w = stepped
    return w, max_iters


def _soft_min(lam, mu):
    """-mu log sum exp(-lambda / mu), shifted for stability."""
    low = float(np.min(lam))
    return low - mu * math.log(float(np.sum(np.exp(-(lam - low) / mu))))


def _soft_min_hessian(VQ, lam, pi, g, mu):
    """
    Hessian in the weights of the soft-min of sum_i w_i v_i v_i^T.

    ``VQ`` holds the vectors in the eigenbasis, ``pi`` the soft-min weights
    of the eigenvalues and ``g`` the gradient. The divided differences of pi
    are taken from the smaller eigenvalue so expm1 never overflows.
    """
    m, d = VQ.shape
    spread = np.abs(lam[:, None] - lam[None, :])
    top = np.maximum(pi[:, None], pi[None, :])
    gamma = np.where(spread > 0, top * np.expm1(-spread / mu) / np.where(spread > 0, spread, 1.0), -top / mu)
    C = (VQ[:, :, None] * VQ[:, None, :]).reshape(m, d * d)
    return (C * gamma.ravel()) @ C.T + np.outer(g, g) / mu


def _newton_direction(K, grad, w):
    """Newton step of a concave model with negated Hessian K, keeping sum(w) fixed; solved in w-scaled coordinates."""
    Ks = K * np.outer(w, w)
    b = w * grad
    try:
        factor = cho_factor(Ks)
        sol_b, sol_c = cho_solve(factor, b), cho_solve(factor, w)
    except LinAlgError:
        sol_b, sol_c = np.linalg.lstsq(Ks, np.column_stack([b, w]), rcond=None)[0].T
    nu = float(w @ sol_b) / float(w @ sol_c)
    return w * (sol_b - nu * sol_c)


def _solve_e_smoothed(V, tol, max_iters, report, k):
    """
    Newton ascent on the matrix soft-min plus a log barrier on the weights.

    The temperature mu starts at lambda_max / 10 and is cut geometrically,
    each value getting at most CENTERING_STEPS Newton steps. Near the center
    for mu, max_i v_i^T P v_i - lambda_min <= mu (m + log d) with P the
    soft-min gradient, so P becomes the dual certificate once mu is small.
    """
    m, d = V.shape
    w = np.full(m, 1.0 / m)
    lam_max = float(np.linalg.eigvalsh(_gram(V, w))[-1])
    mu = lam_max / 10.0
    mu_floor = tol * lam_max * 1e-6
    P = None
    iteration = 0

    def barrier_value(w):
        if np.any(w <= 0):
            return -math.inf
        return _soft_min(np.linalg.eigvalsh(_gram(V, w)), mu) + mu * float(np.sum(np.log(w)))

    while iteration < max_iters:
        for _ in range(CENTERING_STEPS):
            if iteration >= max_iters:
                break
            if report:
                report(iteration, w)
            iteration += 1
            lam, Q = np.linalg.eigh(_gram(V, w))
            pi = np.exp(-(lam - lam[0]) / mu)
            pi = pi / pi.sum()
            VQ = V @ Q
            g = (VQ ** 2) @ pi
            P = (Q * pi) @ Q.T
            # half the tolerance, the certificate is recomputed in the original scale
            if g.max() - lam[0] <= 0.5 * tol * lam[0]:
                return w, iteration, P
            grad = g + mu / w
            K = np.diag(mu / w ** 2) - _soft_min_hessian(VQ, lam, pi, g, mu)
            step = _newton_direction(K, grad, w)
            decrement = float(grad @ step)
            if decrement <= 1e-9 * mu:
                break
            negative = step < 0
            t = min(1.0, 0.99 * float(np.min(-w[negative] / step[negative]))) if negative.any() else 1.0
            base = barrier_value(w)
            # near the center the Armijo gain drops below the rounding of the barrier value
            slack = 1e-13 * max(1.0, abs(base))
            while t > 1e-12 and barrier_value(w + t * step) < base + 0.25 * t * decrement - slack:
                t *= 0.5
            if t <= 1e-12:
                logger.debug("E centering stalled at mu=%.3g", mu)
                break
            w = w + t * step
            w = w / w.sum()
        if mu <= mu_floor:
            break
        mu = max(mu * MU_FACTOR, mu_floor)
    return w, iteration, P


def _solve_e_sdp(V, tol, max_iters):
    """
    max t subject to sum_i w_i v_i v_i^T - t I >= 0, w >= 0, sum w = 1.

    Returns (w, iterations, P) with P the normalized dual matrix, or None when
    cvxopt is unavailable or does not reach an optimal status.
    """
    try:
        from cvxopt import matrix, solvers
    except ImportError:
        logger.warning("cvxopt is not installed; using the smoothed E solver")
        return None
    m, d = V.shape
    c = np.zeros(m + 1)
    c[0] = -1.0
    Gl = np.hstack([np.zeros((m, 1)), -np.eye(m)])
    Gs = np.empty((d * d, m + 1))
    Gs[:, 0] = np.eye(d).ravel()
    for i in range(m):
        Gs[:, i + 1] = -np.outer(V[i], V[i]).ravel()
    A = np.hstack([[0.0], np.ones(m)]).reshape(1, m + 1)
    options = {
        "show_progress": False,
        "abstol": SDP_ABSTOL,
        "reltol": SDP_RELTOL,
        "feastol": SDP_FEASTOL,
        "maxiters": min(int(max_iters), 200),
    }
    try:
        sol = solvers.sdp(
            matrix(c), Gl=matrix(Gl), hl=matrix(np.zeros(m)),
            Gs=[matrix(Gs)], hs=[matrix(np.zeros((d, d)))],
            A=matrix(A), b=matrix(np.ones(1)), options=options,
        )
    except (ArithmeticError, ValueError) as exc:
        logger.warning("cvxopt sdp failed (%s: %s); using the smoothed E solver", type(exc).__name__, exc)
        return None
    if sol["status"] != "optimal" or sol["x"] is None or sol["zs"] is None:
        logger.warning("cvxopt sdp ended with status %r; using the smoothed E solver", sol["status"])
        return None
    logger.debug("cvxopt sdp finished after %s iterations", sol.get("iterations"))
    w = np.clip(np.array(sol["x"]).ravel()[1:], 0.0, None)
    if not w.sum() > 0:
        logger.warning("cvxopt sdp returned zero weights; using the smoothed E solver")
        return None
    w = w / w.sum()
    Z = np.array(sol["zs"][0])
    Z = 0.5 * (Z + Z.T)
    P = Z / np.trace(Z) if np.trace(Z) > 0 else None
    return w, int(sol.get("iterations") or 0), P
