# Copyright (c) 2025, Weighted L1 Recovery contributors
# See license.txt

import tempfile
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose

from weighted_l1_recovery.exceptions import CapExceeded, DimensionMismatch, InfeasibleProblem
from weighted_l1_recovery.sparse_recovery.lpsolve.lpsolve import (
	LinearProgram,
	LpStatus,
	SolverOptions,
	build_weighted_l1_lp,
	dump_lp,
	enumerate_basic_solutions,
	solve,
	split_solution,
)
from weighted_l1_recovery.tests.utils import ToolkitTestCase, slow


def random_weighted_l1_lp(rng, m, n):
	A = rng.standard_normal((m, n))
	x = np.zeros(n)
	support = rng.choice(n, size=max(1, m // 3), replace=False)
	x[support] = rng.standard_normal(len(support))
	w = rng.uniform(0.5, 3.0, size=n)
	return build_weighted_l1_lp(A, A @ x, w)


class TestBuildWeightedL1(ToolkitTestCase):
	def test_shape_contract(self):
		lp = build_weighted_l1_lp([[1.0, 1.0]], [1.0], [1.0, 1.0])
		self.assertEqual((lp.n_rows, lp.n_vars), (1, 4))
		assert_allclose(lp.E, [[1.0, 1.0, -1.0, -1.0]])
		assert_allclose(lp.lb, np.zeros(4))

	def test_objective_is_weights_twice(self):
		w = np.array([1.0, 2.0, 3.0])
		lp = build_weighted_l1_lp(np.eye(3)[:2], [0.0, 1.0], w)
		assert_allclose(lp.c, np.concatenate([w, w]))

	def test_dimension_mismatch(self):
		with self.assertRaises(DimensionMismatch):
			build_weighted_l1_lp(np.ones((2, 3)), [1.0], [1.0, 1.0, 1.0])
		with self.assertRaises(DimensionMismatch):
			build_weighted_l1_lp(np.ones((2, 3)), [1.0, 1.0], [1.0, 1.0])

	def test_split_solution(self):
		assert_allclose(split_solution(np.array([1.0, 0.0, 0.0, 2.0])), [1.0, -2.0])


class TestSolve(ToolkitTestCase):
	def test_one_dimensional_l1(self):
		sol = solve(LinearProgram(c=[1.0, 1.0], E=[[1.0, -1.0]], d=[1.0]))
		self.assertEqual(sol.status, LpStatus.OPTIMAL)
		self.assertAlmostEqual(sol.objective, 1.0, places=7)
		assert_allclose(sol.x, [1.0, 0.0], atol=1e-7)

	def test_zero_data_gives_origin(self):
		E = np.array([[1.0, -1.0, 2.0], [0.5, 1.0, -1.0]])
		sol = solve(LinearProgram(c=[1.0, 2.0, 0.5], E=E, d=[0.0, 0.0]))
		self.assertEqual(sol.status, LpStatus.OPTIMAL)
		assert_allclose(sol.x, np.zeros(3), atol=1e-7)
		self.assertAlmostEqual(sol.objective, 0.0, places=7)

	def test_matches_basis_enumeration(self):
		rng = np.random.default_rng(20)
		for _ in range(30):
			m = int(rng.integers(2, 5))
			lp = random_weighted_l1_lp(rng, m, 6)
			sol = solve(lp)
			self.assertEqual(sol.status, LpStatus.OPTIMAL)
			_, best = enumerate_basic_solutions(lp)
			self.assertAlmostEqual(sol.objective, best, delta=1e-6 * (1 + abs(best)))

	@slow
	def test_certified_against_basis_enumeration(self):
		rng = np.random.default_rng(23)
		for trial in range(500):
			n = int(rng.integers(3, 9))
			m = int(rng.integers(1, n))
			lp = random_weighted_l1_lp(rng, m, n)
			sol = solve(lp)
			with self.subTest(trial=trial, m=m, n=n):
				self.assertEqual(sol.status, LpStatus.OPTIMAL)
				self.assertLessEqual(sol.gap, 1e-8)
				_, best = enumerate_basic_solutions(lp)
				self.assertAlmostEqual(sol.objective, best, delta=1e-6 * (1 + abs(best)))

	def test_duality_and_complementarity_at_optimum(self):
		rng = np.random.default_rng(21)
		lp = random_weighted_l1_lp(rng, 10, 25)
		sol = solve(lp)
		self.assertEqual(sol.status, LpStatus.OPTIMAL)
		self.assertGreaterEqual(sol.objective, sol.dual_objective - 1e-7 * (1 + abs(sol.objective)))
		self.assertLessEqual(abs(sol.x @ sol.z), 1e-6 * (1 + abs(sol.objective)))
		self.assertLessEqual(sol.primal_residual, 1e-6 * (1 + np.linalg.norm(lp.d)))

	def test_row_and_column_permutation(self):
		rng = np.random.default_rng(22)
		lp = random_weighted_l1_lp(rng, 8, 12)
		base = solve(lp)

		rows = rng.permutation(lp.n_rows)
		cols = rng.permutation(lp.n_vars)
		permuted = solve(LinearProgram(c=lp.c[cols], E=lp.E[rows][:, cols], d=lp.d[rows]))

		self.assertEqual(permuted.status, LpStatus.OPTIMAL)
		self.assertAlmostEqual(permuted.objective, base.objective, delta=1e-7 * (1 + abs(base.objective)))
		assert_allclose(split_solution(permuted.x[np.argsort(cols)]), split_solution(base.x), atol=1e-5)

	def test_free_and_shifted_variables(self):
		# min x1 + x2 with x1 free, x2 >= 1, x1 + x2 = 3 and x1 - x2 = -1
		lp = LinearProgram(c=[1.0, 1.0], E=[[1.0, 1.0], [1.0, -1.0]], d=[3.0, -1.0], lb=[-np.inf, 1.0])
		sol = solve(lp)
		self.assertEqual(sol.status, LpStatus.OPTIMAL)
		assert_allclose(sol.x, [1.0, 2.0], atol=1e-6)

	def test_inconsistent_zero_row_is_infeasible(self):
		lp = LinearProgram(c=[1.0, 1.0], E=[[1.0, -1.0], [0.0, 0.0]], d=[1.0, 2.0])
		self.assertEqual(solve(lp).status, LpStatus.INFEASIBLE)

	def test_consistent_zero_row_is_dropped(self):
		lp = LinearProgram(c=[1.0, 1.0], E=[[1.0, -1.0], [0.0, 0.0]], d=[1.0, 0.0])
		sol = solve(lp)
		self.assertEqual(sol.status, LpStatus.OPTIMAL)
		self.assertAlmostEqual(sol.objective, 1.0, places=7)
		self.assertEqual(sol.y[1], 0.0)

	def test_dependent_rows(self):
		E = [[1.0, -1.0, 1.0], [2.0, -2.0, 2.0]]
		self.assertEqual(solve(LinearProgram(c=[1.0, 1.0, 3.0], E=E, d=[1.0, 2.0])).status, LpStatus.OPTIMAL)
		self.assertEqual(solve(LinearProgram(c=[1.0, 1.0, 3.0], E=E, d=[1.0, 3.0])).status, LpStatus.INFEASIBLE)

	def test_farkas_infeasible(self):
		sol = solve(LinearProgram(c=[1.0, 1.0], E=[[1.0, 1.0]], d=[-1.0]))
		self.assertEqual(sol.status, LpStatus.INFEASIBLE)

	def test_unbounded(self):
		sol = solve(LinearProgram(c=[-1.0, 0.0], E=[[1.0, -1.0]], d=[0.0]))
		self.assertEqual(sol.status, LpStatus.UNBOUNDED)

	def test_iteration_cap(self):
		rng = np.random.default_rng(23)
		sol = solve(random_weighted_l1_lp(rng, 10, 25), SolverOptions(max_iter=1))
		self.assertEqual(sol.status, LpStatus.ITER_LIMIT)
		self.assertFalse(sol.optimal)

	def test_options_from_settings(self):
		opts = SolverOptions.from_settings(max_iter=50)
		self.assertEqual(opts.max_iter, 50)
		self.assertEqual(opts.tol_feas, 1e-8)
		self.assertEqual(opts.step_fraction, 0.995)


class TestEnumerationAndDump(ToolkitTestCase):
	def test_enumeration_cap(self):
		lp = build_weighted_l1_lp(np.ones((1, 9)), [1.0], np.ones(9))
		with self.assertRaises(CapExceeded):
			enumerate_basic_solutions(lp)

	def test_enumeration_infeasible(self):
		with self.assertRaises(InfeasibleProblem):
			enumerate_basic_solutions(LinearProgram(c=[1.0, 1.0], E=[[1.0, 1.0]], d=[-1.0]))

	def test_dump_is_fixed_format(self):
		lp = build_weighted_l1_lp([[1.0, 2.0]], [3.0], [1.0, 2.0])
		with tempfile.TemporaryDirectory() as tmp:
			text = dump_lp(lp, Path(tmp) / "lp.txt").read_text()
		lines = text.splitlines()
		self.assertEqual(lines[0], "LP 1 ROWS 4 COLUMNS")
		self.assertIn("OBJECTIVE", lines)
		self.assertIn("RHS", lines)
		self.assertEqual(lines[-1], "END")
		objective = lines[lines.index("OBJECTIVE") + 1]
		self.assertEqual(len(objective), 80)
		assert_allclose([float(objective[i : i + 20]) for i in range(0, 80, 20)], [1.0, 2.0, 1.0, 2.0])
