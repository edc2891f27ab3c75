import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from apps.design.exceptions import InvalidInstance
from apps.design.family import (
    FamilyContext,
    PartialSelection,
    children_polys,
    children_weights,
    conditional_expected_charpoly,
    e_design_root_bound,
    falling_ratio,
    normalized_root_poly,
    root_eigenvalues,
    root_poly_closed_form,
    root_poly_expansion,
    shifted_root_poly_exact,
)
from apps.design.linalg import char_poly
from apps.design.poly import coefficient_distance, min_root

SCALARS = [[1.0], [2.0]]


def scalar_context(normalize=False):
    return FamilyContext.build(SCALARS, [1.0, 1.0], 2, normalize_trace=normalize)


class FamilyContextTests(SimpleTestCase):

    def test_probabilities(self):
        ctx = FamilyContext.build(SCALARS, [0.5, 1.5], 2)
        np.testing.assert_allclose(children_weights(ctx), [0.25, 0.75])
        self.assertAlmostEqual(children_weights(ctx).sum(), 1.0, delta=1e-10)

    def test_single_vector(self):
        np.testing.assert_allclose(children_weights(FamilyContext.build([[1.0]], [2.0], 2)), [1.0])

    def test_trace_normalized(self):
        ctx = FamilyContext.build([[1.0, 0.0], [1.0, 3.0], [0.0, 2.0]], [1.0, 2.0, 1.0], 4)
        self.assertAlmostEqual(ctx.M.trace(), 2.0, delta=1e-12)

    def test_rejects_wrong_sum(self):
        with self.assertRaises(InvalidInstance):
            FamilyContext.build(SCALARS, [1.0, 2.0], 2)

    def test_rejects_negative(self):
        with self.assertRaises(InvalidInstance):
            FamilyContext.build(SCALARS, [-1.0, 3.0], 2)


class PartialSelectionTests(SimpleTestCase):

    def test_extend_tracks_gram(self):
        ctx = FamilyContext.build([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]], [1.0, 1.0, 1.0], 3)
        node = PartialSelection.root(2).extend(ctx, 1).extend(ctx, 2).extend(ctx, 1)
        self.assertEqual(node.prefix, (1, 2, 1))
        self.assertEqual(node.level, 3)
        self.assertTrue(node.is_consistent(ctx))

    def test_prefix_longer_than_budget(self):
        with self.assertRaises(InvalidInstance):
            PartialSelection.from_prefix(scalar_context(), (0, 1, 0))


class RootPolyTests(SimpleTestCase):

    def test_scalar(self):
        np.testing.assert_allclose(root_poly_closed_form([5.0], 2, 1).coeffs, [-5, 1])

    def test_zero_eigenvalues(self):
        np.testing.assert_allclose(root_poly_closed_form(np.zeros(3), 5, 3).coeffs, [0, 0, 0, 1])

    def test_all_ones(self):
        d = 4
        expected = [(-1) ** i * math.comb(d, i) ** 2 * math.factorial(i) / d ** i for i in range(d + 1)]
        np.testing.assert_allclose(root_poly_closed_form(np.ones(d), d, d).coeffs, expected[::-1], atol=1e-12)

    def test_eigenvalue_count(self):
        with self.assertRaises(InvalidInstance):
            root_poly_closed_form([1.0, 2.0, 3.0], 4, 2)

    def test_budget_below_dimension(self):
        with self.assertRaises(InvalidInstance):
            root_poly_closed_form([1.0, 1.0], 1, 2)

    def test_normalized_small(self):
        self.assertEqual(list(normalized_root_poly(1, 1, exact=True).coeffs), [-1, 1])
        self.assertEqual(list(normalized_root_poly(2, 2, exact=True).coeffs), [Fraction(1, 2), -2, 1])

    def test_closed_forms_agree_exactly(self):
        for k in range(1, 13):
            for d in range(1, k + 1):
                expansion = list(root_poly_expansion(k, d).coeffs)
                self.assertEqual(list(normalized_root_poly(k, d, exact=True).coeffs), expansion, (k, d))
                self.assertEqual(list(shifted_root_poly_exact(k, d).coeffs), expansion, (k, d))

    def test_floating_matches_exact(self):
        p = root_poly_closed_form(np.ones(5), 9, 5)
        q = root_poly_expansion(9, 5)
        self.assertLessEqual(coefficient_distance(p, q), 1e-10)

    def test_e_design_root_bound(self):
        for d in (1, 2, 3, 5, 8):
            for k in (d, d + 1, 2 * d, 3 * d + 2):
                root = min_root(normalized_root_poly(k, d, exact=True))
                self.assertGreaterEqual(root, e_design_root_bound(k, d) - 1e-7, (k, d))

    def test_two_by_two_root(self):
        root = min_root(normalized_root_poly(2, 2, exact=True))
        self.assertAlmostEqual(root, 1 - math.sqrt(2) / 2, delta=1e-9)
        self.assertLess(e_design_root_bound(2, 2), root)

    def test_falling_ratio_branches_agree(self):
        self.assertAlmostEqual(falling_ratio(10, 3, 10), 720 / 1000)
        exact = math.perm(70, 4) / 70 ** 4
        self.assertAlmostEqual(falling_ratio(70, 4, 70), exact, delta=1e-12)


class ConditionalExpectedCharpolyTests(SimpleTestCase):

    def test_scalar_root(self):
        ctx = scalar_context()
        p = conditional_expected_charpoly(ctx, PartialSelection.root(1))
        np.testing.assert_allclose(p.coeffs, [-5, 1], atol=1e-10)

    def test_scalar_prefix(self):
        ctx = scalar_context()
        p = conditional_expected_charpoly(ctx, PartialSelection.from_prefix(ctx, (0,)))
        np.testing.assert_allclose(p.coeffs, [-3.5, 1], atol=1e-10)

    def test_normalized_roots_scale(self):
        ctx = scalar_context(normalize=True)
        p = conditional_expected_charpoly(ctx, PartialSelection.root(1))
        self.assertAlmostEqual(min_root(p) / ctx.scale ** 2, 5.0, delta=1e-9)

    def test_leaf_is_char_poly(self):
        ctx = FamilyContext.build([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]], [1.0, 1.0, 1.0], 3)
        node = PartialSelection.from_prefix(ctx, (0, 2, 2))
        np.testing.assert_allclose(conditional_expected_charpoly(ctx, node).coeffs, char_poly(node.A).coeffs)

    def test_root_matches_closed_form(self):
        rng = np.random.default_rng(41)
        for d, k, m in ((2, 3, 4), (3, 5, 6), (4, 4, 7)):
            ctx = FamilyContext.build(rng.standard_normal((m, d)), k * rng.dirichlet(np.ones(m)), k)
            p = conditional_expected_charpoly(ctx, PartialSelection.root(d))
            q = root_poly_closed_form(root_eigenvalues(ctx), k, d)
            self.assertLessEqual(coefficient_distance(p, q), 1e-8)

    def test_parent_is_average_of_children(self):
        rng = np.random.default_rng(43)
        ctx = FamilyContext.build(rng.standard_normal((5, 3)), 4 * rng.dirichlet(np.ones(5)), 4)
        node = PartialSelection.from_prefix(ctx, (2,))
        parent = conditional_expected_charpoly(ctx, node)
        children = children_polys(ctx, node)
        mixed = sum(p * np.asarray(child.coeffs) for p, child in zip(ctx.probabilities, children))
        self.assertLessEqual(np.max(np.abs(mixed - parent.coeffs)), 1e-8 * np.max(np.abs(parent.coeffs)))

    def test_children_sandwich_min_root(self):
        rng = np.random.default_rng(47)
        ctx = FamilyContext.build(rng.standard_normal((4, 3)), 3 * rng.dirichlet(np.ones(4)), 3)
        node = PartialSelection.root(3)
        parent = min_root(conditional_expected_charpoly(ctx, node))
        roots = [min_root(p) for p in children_polys(ctx, node)]
        self.assertGreaterEqual(max(roots), parent - 1e-7)
        self.assertLessEqual(min(roots), parent + 1e-7)

    def test_workers_give_same_children(self):
        rng = np.random.default_rng(53)
        ctx = FamilyContext.build(rng.standard_normal((6, 2)), 3 * rng.dirichlet(np.ones(6)), 3)
        node = PartialSelection.root(2)
        serial = children_polys(ctx, node, workers=1)
        pooled = children_polys(ctx, node, workers=4)
        for p, q in zip(serial, pooled):
            np.testing.assert_array_equal(p.coeffs, q.coeffs)

    def test_below_leaves(self):
        ctx = scalar_context()
        node = PartialSelection.root(1).extend(ctx, 0).extend(ctx, 0).extend(ctx, 0)
        with self.assertRaises(InvalidInstance):
            conditional_expected_charpoly(ctx, node)
