# Copyright (c) 2025, Weighted L1 Recovery contributors
# See license.txt

import numpy as np
import scipy.linalg
from numpy.testing import assert_allclose, assert_array_equal

from weighted_l1_recovery.exceptions import CapExceeded, InfeasibleProblem
from weighted_l1_recovery.sparse_recovery.lpsolve.lpsolve import LpStatus, SolverOptions
from weighted_l1_recovery.sparse_recovery.model.model import (
	SparsityModel,
	WeightScheme,
	gaussian_instance,
	weighted_norm,
)
from weighted_l1_recovery.sparse_recovery.recovery.recovery import (
	all_sign_patterns_recovered,
	is_success,
	nullspace_condition,
	nullspace_margin,
	recover,
	recover_l1,
	recovery_oracle_bruteforce,
	solve_weighted_l1,
)
from weighted_l1_recovery.tests.utils import ToolkitTestCase


class TestRecover(ToolkitTestCase):
	def setUp(self):
		super().setUp()
		self.model = SparsityModel(n=40, n1=20, n2=20, P1=0.1, P2=0.05)

	def test_zero_signal_is_recovered(self):
		model = SparsityModel(n=30, n1=15, n2=15, P1=0.0, P2=0.0)
		instance = gaussian_instance(model, 12, seed=3)
		result = recover(instance, WeightScheme.two_valued(model, 2.0))
		self.assertEqual(result.status, LpStatus.OPTIMAL)
		self.assertTrue(result.success)
		assert_allclose(result.x_hat, np.zeros(30), atol=1e-7)

	def test_square_invertible_system(self):
		rng = np.random.default_rng(5)
		A = rng.standard_normal((6, 6))
		x = rng.standard_normal(6)
		x_hat, sol = solve_weighted_l1(A, A @ x, np.ones(6))
		self.assertTrue(sol.optimal)
		assert_allclose(x_hat, x, atol=1e-6)

	def test_sparse_signal_is_recovered(self):
		instance = gaussian_instance(self.model, 25, seed=11)
		result = recover(instance, WeightScheme.two_valued(self.model, 1.5))
		self.assertTrue(result.success)
		self.assertLessEqual(result.max_abs_error, 1e-6 * max(1.0, np.abs(instance.x_true.x).max()))
		self.assertAlmostEqual(result.objective, weighted_norm(result.x_hat, WeightScheme.two_valued(self.model, 1.5)))

	def test_unit_second_weight_is_plain_l1(self):
		instance = gaussian_instance(self.model, 20, seed=12)
		weighted = recover(instance, WeightScheme.two_valued(self.model, 1.0))
		plain = recover_l1(instance)
		assert_array_equal(weighted.x_hat, plain.x_hat)
		self.assertEqual(weighted.success, plain.success)

	def test_unit_weight_ignores_class_split(self):
		# with P1 = P2 the instance and the weights do not see n1
		results = []
		for n1 in (20, 8, 35):
			model = SparsityModel(n=40, n1=n1, n2=40 - n1, P1=0.15, P2=0.15)
			instance = gaussian_instance(model, 20, seed=16)
			results.append((instance.key, recover(instance, WeightScheme.two_valued(model, 1.0))))
		for key, result in results[1:]:
			self.assertEqual(key, results[0][0])
			assert_array_equal(result.x_hat, results[0][1].x_hat)
			self.assertEqual(result.success, results[0][1].success)

	def test_scaling_weights_keeps_minimizer(self):
		instance = gaussian_instance(self.model, 25, seed=13)
		w = WeightScheme.two_valued(self.model, 2.0).weights
		x1, _ = solve_weighted_l1(instance.A, instance.y, w)
		x2, _ = solve_weighted_l1(instance.A, instance.y, 3.0 * w)
		assert_allclose(x1, x2, atol=1e-6)

	def test_scaling_measurements_scales_solution(self):
		instance = gaussian_instance(self.model, 25, seed=14)
		w = WeightScheme.two_valued(self.model, 2.0).weights
		x1, _ = solve_weighted_l1(instance.A, instance.y, w)
		x2, _ = solve_weighted_l1(instance.A, 4.0 * instance.y, w)
		assert_allclose(x2, 4.0 * x1, atol=1e-5)

	def test_iteration_cap_is_not_a_success(self):
		instance = gaussian_instance(self.model, 25, seed=15)
		result = recover(instance, WeightScheme.uniform(40), SolverOptions(max_iter=1))
		self.assertEqual(result.status, LpStatus.ITER_LIMIT)
		self.assertFalse(result.success)


class TestIsSuccess(ToolkitTestCase):
	def test_relative_rule(self):
		self.assertTrue(is_success([1.0 + 1e-7], [1.0])[0])
		self.assertFalse(is_success([1.0 + 1e-5], [1.0])[0])
		# tolerance scales with the largest entry once it exceeds one
		self.assertTrue(is_success([100.0 + 5e-5], [100.0])[0])
		self.assertFalse(is_success([100.0 + 2e-4], [100.0])[0])

	def test_reports_error(self):
		success, error = is_success([0.0, 0.5], [0.0, 0.0], success_tol=1.0)
		self.assertTrue(success)
		self.assertEqual(error, 0.5)


class TestNullspaceCondition(ToolkitTestCase):
	def test_trivial_null_space(self):
		A = np.random.default_rng(1).standard_normal((5, 5))
		self.assertTrue(nullspace_condition(A, [0, 1, 2], np.ones(5)))

	def test_empty_and_full_support(self):
		A = np.random.default_rng(2).standard_normal((3, 6))
		self.assertTrue(nullspace_condition(A, [], np.ones(6)))
		self.assertFalse(nullspace_condition(A, range(6), np.ones(6)))

	def test_agrees_with_sign_pattern_recovery(self):
		rng = np.random.default_rng(3)
		for trial in range(100):
			n = int(rng.integers(8, 13))
			m = int(rng.integers(6, min(n, 11)))
			k = int(rng.integers(1, 5))
			W2 = float(rng.choice([1.0, 2.0, 3.0]))
			w = np.where(np.arange(n) < n // 2, 1.0, W2)
			A = rng.standard_normal((m, n))
			K = rng.choice(n, size=k, replace=False)
			with self.subTest(trial=trial, n=n, m=m, k=k, W2=W2):
				self.assertEqual(nullspace_condition(A, K, w), all_sign_patterns_recovered(A, K, w))

	def test_one_dimensional_null_space(self):
		# a single null direction z: every orthant but sign(z_K) is empty
		rng = np.random.default_rng(7)
		for _ in range(5):
			A = rng.standard_normal((9, 10))
			K = np.array([0, 3, 5, 8])
			w = np.where(np.arange(10) < 5, 1.0, 2.0)
			z = scipy.linalg.null_space(A)[:, 0]
			Kc = np.setdiff1d(np.arange(10), K)
			expected = np.sum(w[Kc] * np.abs(z[Kc])) / np.sum(w[K] * np.abs(z[K])) - 1.0
			assert_allclose(nullspace_margin(A, K, w), expected, rtol=1e-6, atol=1e-7)

	def test_margin_scales_with_off_support_weight(self):
		rng = np.random.default_rng(4)
		A = rng.standard_normal((7, 10))
		K = [0, 4, 7]
		base = nullspace_margin(A, K, np.ones(10))
		w = np.full(10, 2.0)
		w[K] = 1.0
		assert_allclose(nullspace_margin(A, K, w), 2.0 * (base + 1.0) - 1.0, rtol=1e-6, atol=1e-6)

	def test_parallel_orthants_agree(self):
		rng = np.random.default_rng(5)
		A = rng.standard_normal((6, 9))
		K = [1, 2, 5]
		assert_allclose(nullspace_margin(A, K, np.ones(9), n_jobs=2), nullspace_margin(A, K, np.ones(9)), atol=1e-8)

	def test_cap(self):
		with self.assertRaises(CapExceeded):
			nullspace_condition(np.ones((3, 17)), [0], np.ones(17))


class TestBruteForceOracle(ToolkitTestCase):
	def test_matches_interior_point_objective(self):
		rng = np.random.default_rng(6)
		for _ in range(10):
			A = rng.standard_normal((3, 6))
			x = np.zeros(6)
			x[rng.integers(6)] = rng.standard_normal()
			w = rng.uniform(0.5, 2.0, size=6)
			y = A @ x
			oracle = recovery_oracle_bruteforce(A, y, w)
			x_hat, sol = solve_weighted_l1(A, y, w)
			self.assertTrue(sol.optimal)
			assert_allclose(A @ oracle, y, atol=1e-8)
			self.assertAlmostEqual(weighted_norm(oracle, w), weighted_norm(x_hat, w), delta=1e-6)

	def test_inconsistent_measurements(self):
		A = np.array([[1.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0]])
		with self.assertRaises(InfeasibleProblem):
			recovery_oracle_bruteforce(A, [1.0, 3.0], np.ones(4))

	def test_cap(self):
		with self.assertRaises(CapExceeded):
			recovery_oracle_bruteforce(np.ones((2, 9)), [1.0, 1.0], np.ones(9))
