"""
Deterministic rounding by descent of the interlacing family.

At each of the k levels every child of the current node is scored by the
objective's selection rule and the best one is fixed (lowest index on ties).
The integral objective is then recomputed from the selected vectors and
compared against the relaxation.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import conf
from .exceptions import GuaranteeViolated, InvalidInstance
from .family import FamilyContext, PartialSelection, children_polys, conditional_expected_charpoly
from .linalg import gram, inv_sqrt, lambda_min
from .poly import min_root
from .relax import ObjectiveTag, matrix_objective

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class ObjectiveScore:
    """Node score; the infinite sentinel compares above every finite value."""
    is_infinite: bool
    value: float

    @classmethod
    def of(cls, value):
        value = float(value)
        if math.isinf(value) or math.isnan(value):
            return INFINITE_SCORE
        return cls(False, value)

    def __float__(self):
        return math.inf if self.is_infinite else self.value


INFINITE_SCORE = ObjectiveScore(True, math.inf)


@dataclass(frozen=True)
class LevelChoice:
    level: int
    index: int
    parent_score: ObjectiveScore
    child_score: ObjectiveScore

    def as_dict(self):
        return {
            "level": self.level,
            "index": self.index,
            "parent_score": float(self.parent_score),
            "child_score": float(self.child_score),
        }


@dataclass(frozen=True, eq=False)
class RoundingResult:
    selection: tuple
    integral_objective: float
    fractional_objective: float
    certified_ratio: float
    theorem_bound: float
    kind: object
    d: int
    k: int
    root_score: ObjectiveScore = None
    leaf_score: ObjectiveScore = None
    levels: tuple = field(default=(), repr=False)
    lower_bound: float = None

    def as_dict(self):
        data = {
            "selection": list(self.selection),
            "integral_objective": float(self.integral_objective),
            "fractional_objective": float(self.fractional_objective),
            "certified_ratio": float(self.certified_ratio),
            "theorem_bound": float(self.theorem_bound),
            "root_score": float(self.root_score) if self.root_score is not None else None,
            "leaf_score": float(self.leaf_score) if self.leaf_score is not None else None,
            "levels": [choice.as_dict() for choice in self.levels],
        }
        if self.lower_bound is not None:
            data["lambda_min_lower_bound"] = float(self.lower_bound)
        return data


def _is_negligible(value, coeffs):
    return abs(value) <= conf.get("SINGULAR_CUTOFF") * max(1.0, float(np.max(np.abs(coeffs))))


def node_score(p, kind, d):
    """
    Selection score of a family polynomial.

    E: minimum root. D: (-1)^d p(0). A: -p'(0)/p(0). Ratio: E_l'/E_l read off
    the coefficients of x^{d-l'} and x^{d-l}. E and D are maximized, A and the
    ratio minimized; a vanishing denominator gives the infinite sentinel.
    """
    if kind.tag is ObjectiveTag.E:
        return ObjectiveScore.of(min_root(p))
    c = np.zeros(d + 1)
    raw = np.asarray(p.coeffs, dtype=float)
    c[:raw.size] = raw[:d + 1]
    if kind.tag is ObjectiveTag.D:
        return ObjectiveScore.of((-1) ** d * c[0])
    lp, l = kind.orders(d)
    denominator = c[d - l]
    if _is_negligible(denominator, c):
        return INFINITE_SCORE
    return ObjectiveScore.of((-1) ** (lp - l) * c[d - lp] / denominator)


def _better(a, b, maximize):
    return a > b if maximize else a < b


def _violates(child, parent, maximize, tol):
    if maximize:
        return float(child) < float(parent) - tol * max(1.0, abs(float(parent)))
    if parent.is_infinite:
        return False
    return child.is_infinite or child.value > parent.value + tol * max(1.0, abs(parent.value))


def family_context(inst, frac, kind):
    """The family the rounding descends: E-design works on X^{-1/2}-whitened vectors."""
    vectors = inst.vectors
    if kind.tag is ObjectiveTag.E:
        vectors = vectors @ inv_sqrt(frac.X).entries
    return FamilyContext.build(vectors, frac.x, inst.k)


def round_design(inst, frac, kind, workers=None):
    d, k = inst.d, inst.k
    kind.validate(d)
    if np.shape(frac.x) != (inst.m,):
        raise InvalidInstance(f"Fractional solution has {np.size(frac.x)} weights for {inst.m} vectors")
    tol = conf.get("SCORE_TOL")
    maximize = kind.maximizes_score
    ctx = family_context(inst, frac, kind)

    node = PartialSelection.root(d)
    parent = node_score(conditional_expected_charpoly(ctx, node), kind, d)
    root_score = parent
    levels = []
    for level in range(k):
        scores = [node_score(p, kind, d) for p in children_polys(ctx, node, workers)]
        best = 0
        for t in range(1, len(scores)):
            if _better(scores[t], scores[best], maximize):
                best = t
        chosen = scores[best]
        if _violates(chosen, parent, maximize, tol):
            raise GuaranteeViolated(
                f"Level {level}: best child score {float(chosen):.12g} is worse than "
                f"the parent score {float(parent):.12g} for {kind}"
            )
        logger.debug("level %d: picked %d (score %.12g, parent %.12g)", level, best, float(chosen), float(parent))
        levels.append(LevelChoice(level, best, parent, chosen))
        node = node.extend(ctx, best)
        parent = chosen

    selection = node.prefix
    counts = np.bincount(np.asarray(selection, dtype=int), minlength=inst.m)
    integral = matrix_objective(gram(counts, inst.vectors), kind)
    fractional = float(frac.objective_value)
    if math.isinf(integral):
        ratio = math.inf
    else:
        ratio = integral / fractional if fractional > 0 else math.inf
    lower_bound = None
    if kind.tag is ObjectiveTag.E:
        lower_bound = float(parent) / ctx.scale ** 2 * lambda_min(frac.X)
    return RoundingResult(
        selection=selection,
        integral_objective=integral,
        fractional_objective=fractional,
        certified_ratio=ratio,
        theorem_bound=theorem_bound(kind, d, k),
        kind=kind,
        d=d,
        k=k,
        root_score=root_score,
        leaf_score=parent,
        levels=tuple(levels),
        lower_bound=lower_bound,
    )


def theorem_bound(kind, d, k):
    """Worst-case approximation ratio of the rounding, in minimization form."""
    if kind.tag is ObjectiveTag.E:
        return 1.0 / (1.0 - math.sqrt((d - 1) / k)) ** 2
    if kind.tag is ObjectiveTag.A:
        return k / (k - d + 1)
    lp, l = kind.orders(d)
    if k < l:
        raise InvalidInstance(f"Budget k={k} is below l={l}")
    return k * math.exp((math.lgamma(k - l + 1) - math.lgamma(k - lp + 1)) / (l - lp))


def ratio_bound_sharp(kind, d, k):
    """
    Bounds on E_l'/E_l of the rounded solution relative to the relaxation when k = l.

    Returns None unless the objective is a ratio (D and A included) with k = l.
    """
    orders = kind.orders(d)
    if orders is None or orders[1] != k:
        return None
    lp, l = orders
    gap = l - lp
    return {
        "factorial": l ** gap / math.factorial(gap),
        "stirling": (math.e * l / gap) ** gap,
    }


def certify(result, frac, kind, tol=None):
    tol = conf.get("SCORE_TOL") if tol is None else tol
    if math.isinf(result.integral_objective) or math.isinf(frac.objective_value):
        logger.warning("Certification of %s failed: infinite objective", kind)
        return False
    ok = result.integral_objective <= result.theorem_bound * frac.objective_value * (1 + tol)
    sharp = ratio_bound_sharp(kind, result.d, result.k)
    if sharp is not None:
        lp, l = kind.orders(result.d)
        raw = result.certified_ratio ** (l - lp)
        ok = ok and raw <= sharp["factorial"] * (1 + tol) and raw <= sharp["stirling"] * (1 + tol)
    if not ok:
        logger.warning(
            "Certification of %s failed: ratio %.12g against bound %.12g",
            kind, result.certified_ratio, result.theorem_bound,
        )
    return ok
