import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from apps.design.exceptions import InvalidInstance, NumericalFailure, RankDeficient, SingularMatrix
from apps.design.linalg import (
    SymMatrix,
    char_poly,
    char_poly_exact,
    det,
    eigenvalues,
    elementary_symmetric,
    gram,
    inv_sqrt,
    lambda_min,
    sym_eigen,
    trace_inverse,
)
from apps.design.poly import evaluate

M21 = SymMatrix([[2.0, 1.0], [1.0, 1.0]])


def random_spd(rng, d):
    B = rng.standard_normal((d, d))
    return SymMatrix(B @ B.T + 0.1 * np.eye(d))


class SymMatrixTests(SimpleTestCase):

    def test_symmetrized_by_averaging(self):
        M = SymMatrix([[1.0, 2.0], [0.0, 1.0]])
        self.assertEqual(M.entries[0, 1], 1.0)
        self.assertEqual(M.entries[1, 0], 1.0)

    def test_read_only(self):
        with self.assertRaises(ValueError):
            M21.entries[0, 0] = 5.0

    def test_rejects_non_square(self):
        with self.assertRaises(InvalidInstance):
            SymMatrix(np.zeros((2, 3)))


class GramTests(SimpleTestCase):

    def test_scalar(self):
        self.assertEqual(gram([2.0], [[1.0]]).entries.tolist(), [[2.0]])

    def test_orthonormal_basis(self):
        np.testing.assert_array_equal(gram([1, 1], [[1, 0], [0, 1]]).entries, np.eye(2))

    def test_rank_one_sum(self):
        np.testing.assert_allclose(gram([1, 1], [[1, 0], [1, 1]]).entries, [[2, 1], [1, 1]])

    def test_linear_in_weights(self):
        rng = np.random.default_rng(3)
        V = rng.standard_normal((6, 3))
        a, b = rng.random(6), rng.random(6)
        np.testing.assert_allclose(gram(a + b, V).entries, (gram(a, V) + gram(b, V)).entries, atol=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(InvalidInstance):
            gram([1, 1, 1], [[1, 0], [0, 1]])


class SpectrumTests(SimpleTestCase):

    def test_diagonal(self):
        np.testing.assert_allclose(sym_eigen(SymMatrix(np.diag([3.0, 1.0]))).eigenvalues, [1.0, 3.0])

    def test_identity(self):
        np.testing.assert_allclose(eigenvalues(SymMatrix.identity(4)), np.ones(4))

    def test_quadratic_formula(self):
        expected = [(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2]
        np.testing.assert_allclose(sym_eigen(M21).eigenvalues, expected, rtol=1e-12)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(11)
        for d in (1, 3, 6):
            M = random_spd(rng, d)
            spectrum = sym_eigen(M)
            scale = 1 + M.max_abs()
            self.assertLessEqual(np.max(np.abs(spectrum.reconstruct() - M.entries)), 1e-10 * scale)
            Q = spectrum.eigenvectors
            self.assertLessEqual(np.max(np.abs(Q.T @ Q - np.eye(d))), 1e-10)
            self.assertTrue(np.all(np.diff(spectrum.eigenvalues) >= 0))

    def test_non_finite_entries(self):
        with self.assertRaises(NumericalFailure):
            sym_eigen(SymMatrix([[np.nan, 0.0], [0.0, 1.0]]))

    def test_lambda_min(self):
        self.assertAlmostEqual(lambda_min(SymMatrix(np.diag([5.0, 2.0, 7.0]))), 2.0)


class CharPolyTests(SimpleTestCase):

    def test_diagonal(self):
        np.testing.assert_allclose(char_poly(SymMatrix(np.diag([1.0, 2.0]))).coeffs, [2, -3, 1])

    def test_zero_matrix(self):
        p = char_poly(SymMatrix.zeros(3))
        self.assertEqual(p.degree, 3)
        np.testing.assert_allclose(p.coeffs, [0, 0, 0, 1])

    def test_trace_and_determinant(self):
        np.testing.assert_allclose(char_poly(M21).coeffs, [1, -3, 1], atol=1e-12)

    def test_vanishes_at_eigenvalues(self):
        rng = np.random.default_rng(5)
        for d in (2, 4, 7):
            M = random_spd(rng, d)
            lam = eigenvalues(M)
            p = char_poly(M)
            for value in lam:
                self.assertLessEqual(abs(evaluate(p, value)), 1e-8 * (1 + lam[-1]) ** d)

    def test_exact_faddeev_leverrier(self):
        coeffs = char_poly_exact([[1, 2], [2, 1]])
        self.assertEqual(coeffs, [Fraction(-3), Fraction(-2), Fraction(1)])

    def test_exact_matches_floating(self):
        rows = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
        exact = [float(c) for c in char_poly_exact(rows)]
        np.testing.assert_allclose(char_poly(SymMatrix(rows)).coeffs, exact, rtol=1e-12)


class InverseSqrtTests(SimpleTestCase):

    def test_scalar(self):
        self.assertAlmostEqual(inv_sqrt(SymMatrix([[4.0]])).entries[0, 0], 0.5)

    def test_identity_fixed_point(self):
        np.testing.assert_allclose(inv_sqrt(SymMatrix.identity(3)).entries, np.eye(3), atol=1e-12)

    def test_whitens_random_spd(self):
        rng = np.random.default_rng(8)
        M = random_spd(rng, 5)
        W = inv_sqrt(M).entries
        np.testing.assert_allclose(W @ M.entries @ W, np.eye(5), atol=1e-8)

    def test_rank_deficient(self):
        with self.assertRaises(RankDeficient):
            inv_sqrt(SymMatrix([[1.0, 1.0], [1.0, 1.0]]))


class DeterminantTests(SimpleTestCase):

    def test_values(self):
        self.assertAlmostEqual(det(SymMatrix(np.diag([2.0, 3.0]))), 6.0)
        self.assertAlmostEqual(det(SymMatrix([[1.0, 1.0], [1.0, 1.0]])), 0.0)
        self.assertAlmostEqual(det(M21), 1.0)

    def test_matches_spectrum_product(self):
        rng = np.random.default_rng(21)
        M = random_spd(rng, 4)
        self.assertAlmostEqual(det(M) / np.prod(eigenvalues(M)), 1.0, delta=1e-8)


class TraceInverseTests(SimpleTestCase):

    def test_values(self):
        self.assertAlmostEqual(trace_inverse(SymMatrix(np.diag([1.0, 2.0]))), 1.5)
        self.assertAlmostEqual(trace_inverse(SymMatrix.identity(4)), 4.0)
        self.assertAlmostEqual(trace_inverse(M21), 3.0)

    def test_singular(self):
        with self.assertRaises(SingularMatrix):
            trace_inverse(SymMatrix([[1.0, 1.0], [1.0, 1.0]]))


class ElementarySymmetricTests(SimpleTestCase):

    def test_small(self):
        np.testing.assert_allclose(elementary_symmetric([1.0, 2.0, 3.0]), [1, 6, 11, 6])

    def test_empty(self):
        np.testing.assert_allclose(elementary_symmetric([]), [1.0])
