import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from apps.design.exceptions import InvalidInstance, TooLarge, ZeroProbability
from apps.design.family import FamilyContext
from apps.design.generators import basis_copies
from apps.design.oracle import (
    best_leaf,
    enumerate_leaves,
    exact_expected_poly,
    expected_lambda_min,
    run_checks,
)
from apps.design.relax import (
    A_DESIGN,
    D_DESIGN,
    E_DESIGN,
    Instance,
    ObjectiveKind,
    solve_relaxation,
    validate_fractional,
)

SCALARS = [[1.0], [2.0]]


def uniform_table(vectors, k, **kwargs):
    vectors = np.asarray(vectors, dtype=float)
    m = vectors.shape[0]
    return enumerate_leaves(FamilyContext.build(vectors, np.full(m, k / m), k), **kwargs)


class EnumerateLeavesTests(SimpleTestCase):

    def test_single_vector(self):
        table = uniform_table([[1.0]], 2)
        self.assertEqual(len(table), 1)
        self.assertEqual(list(table.probabilities), [1.0])

    def test_two_by_two(self):
        table = uniform_table(SCALARS, 2)
        self.assertEqual(len(table), 4)
        np.testing.assert_allclose(table.probabilities, [0.25] * 4)
        self.assertEqual([tuple(s) for s in table.sequences], [(0, 0), (0, 1), (1, 0), (1, 1)])

    def test_multisets_shared(self):
        table = uniform_table([[1.0], [2.0], [3.0]], 3)
        self.assertEqual(len(table), 27)
        self.assertEqual(len(table.multisets), 10)

    def test_limit(self):
        with self.assertRaises(TooLarge):
            uniform_table([[1.0]] * 10, 4, max_leaves=1000)

    def test_exact_probabilities(self):
        table = uniform_table(SCALARS, 2, exact=True)
        self.assertEqual(sum(table.probabilities), 1)
        self.assertIsInstance(table.probabilities[0], Fraction)


class ExpectedPolyTests(SimpleTestCase):

    def setUp(self):
        self.ctx = FamilyContext.build(SCALARS, [1.0, 1.0], 2, normalize_trace=False)
        self.table = enumerate_leaves(self.ctx)

    def test_root(self):
        np.testing.assert_allclose(exact_expected_poly(self.table, ()).coeffs, [-5, 1])

    def test_prefix(self):
        np.testing.assert_allclose(exact_expected_poly(self.table, (0,)).coeffs, [-3.5, 1])

    def test_full_leaf(self):
        np.testing.assert_allclose(exact_expected_poly(self.table, (1, 0)).coeffs, [-5, 1])

    def test_prefix_too_long(self):
        with self.assertRaises(InvalidInstance):
            exact_expected_poly(self.table, (0, 0, 0))

    def test_zero_probability(self):
        ctx = FamilyContext.build(SCALARS, [0.0, 2.0], 2, normalize_trace=False)
        with self.assertRaises(ZeroProbability):
            exact_expected_poly(enumerate_leaves(ctx), (0,))

    def test_exact_root(self):
        table = enumerate_leaves(self.ctx, exact=True)
        self.assertEqual(list(exact_expected_poly(table, ()).coeffs), [-5, 1])


class ExpectedLambdaMinTests(SimpleTestCase):

    def test_scalars(self):
        self.assertAlmostEqual(expected_lambda_min(uniform_table(SCALARS, 2)), 5.0)

    def test_basis_copies(self):
        for d, expected in ((2, 0.5), (3, 2 / 9), (4, 24 / 256)):
            table = uniform_table(basis_copies(d, d), d)
            self.assertAlmostEqual(expected_lambda_min(table), expected, delta=1e-12)
            self.assertAlmostEqual(expected, math.factorial(d) / d ** d)


class BestLeafTests(SimpleTestCase):

    def test_scalars_e(self):
        sequence, value = best_leaf(uniform_table(SCALARS, 2), E_DESIGN)
        self.assertEqual(sequence, (1, 1))
        self.assertAlmostEqual(value, 1 / 8)

    def test_basis_pair_d(self):
        sequence, value = best_leaf(uniform_table(np.eye(2), 2), D_DESIGN)
        self.assertEqual(sorted(sequence), [0, 1])
        self.assertAlmostEqual(value, 1.0)

    def test_basis_copies_e(self):
        sequence, value = best_leaf(uniform_table(basis_copies(2, 2), 2), E_DESIGN)
        self.assertEqual(sequence, (0, 1))
        self.assertAlmostEqual(value, 1.0)


class RunChecksTests(SimpleTestCase):

    def assertAllPass(self, checks):
        failed = [check for check in checks if not check.passed]
        self.assertEqual(failed, [])

    def test_scalars(self):
        inst = Instance(SCALARS, 2)
        for kind in (D_DESIGN, A_DESIGN, E_DESIGN):
            self.assertAllPass(run_checks(inst, validate_fractional(inst, [1.0, 1.0], kind), kind))

    def test_e_detail_reports_lambda_min(self):
        inst = Instance(SCALARS, 2)
        checks = run_checks(inst, validate_fractional(inst, [1.0, 1.0], E_DESIGN), E_DESIGN)
        detail = {check.name: check.detail for check in checks}['greedy_between_best_leaf_and_root']
        self.assertIn('best leaf [1, 1] 0.125', detail)
        self.assertIn('lambda_min best leaf 8 ', detail)

    def test_basis_copies(self):
        inst = Instance(basis_copies(2, 2), 2)
        for kind in (D_DESIGN, A_DESIGN, E_DESIGN):
            checks = run_checks(inst, solve_relaxation(inst, kind), kind)
            self.assertAllPass(checks)
            names = {check.name for check in checks}
            self.assertIn('sandwich', names)
            self.assertIn('greedy_between_best_leaf_and_root', names)

    def test_random_instance(self):
        rng = np.random.default_rng(97)
        inst = Instance(rng.standard_normal((4, 3)), 4)
        for kind in (D_DESIGN, A_DESIGN, E_DESIGN, ObjectiveKind.ratio(1, 3)):
            self.assertAllPass(run_checks(inst, solve_relaxation(inst, kind), kind, seed=5))

    def test_too_large(self):
        inst = Instance(np.eye(3).repeat(4, axis=0), 6)
        frac = validate_fractional(inst, np.ones(12), D_DESIGN)
        with self.assertRaises(TooLarge):
            run_checks(inst, frac, D_DESIGN, max_leaves=1000)
