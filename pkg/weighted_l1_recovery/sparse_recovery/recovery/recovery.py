# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import optimize
from joblib import Parallel, delayed

from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import CapExceeded, DimensionMismatch, ValidationError, throw
from weighted_l1_recovery.sparse_recovery.lpsolve.lpsolve import (
	LinearProgram,
	LpSolution,
	LpStatus,
	SolverOptions,
	build_weighted_l1_lp,
	enumerate_basic_solutions,
	solve,
	split_solution,
)
from weighted_l1_recovery.sparse_recovery.model.model import ProblemInstance, WeightScheme, as_weights, weighted_norm
from weighted_l1_recovery.utils.logger import logger

log = logger("recovery")

# An orthant minimum below 1 - VIOLATION_TOL counts as a null-space violation.
VIOLATION_TOL = 1e-7
# Nonnegative least-squares residual above which a sign orthant holds no null-space vector.
ORTHANT_RESIDUAL_TOL = 1e-9


@dataclass(eq=False)
class RecoveryResult:
	x_hat: np.ndarray = field(repr=False)
	objective: float
	status: LpStatus
	success: bool
	max_abs_error: float
	degenerate: bool = False
	iterations: int = 0


def solve_weighted_l1(A, y, w, opts: SolverOptions | None = None) -> tuple[np.ndarray, LpSolution]:
	"""argmin sum_i w_i |x_i| subject to A x = y, with the raw LP solution."""
	sol = solve(build_weighted_l1_lp(A, y, w), opts)
	return split_solution(sol.x), sol


def is_success(x_hat, x_true, success_tol: float | None = None) -> tuple[bool, float]:
	"""(success, max_abs_error) under the relative l-infinity rule."""
	success_tol = get_settings().success_tol if success_tol is None else success_tol
	error = float(np.max(np.abs(np.asarray(x_hat) - np.asarray(x_true)), initial=0.0))
	scale = max(1.0, float(np.max(np.abs(x_true), initial=0.0)))
	return error <= success_tol * scale, error


def recover(
	instance: ProblemInstance,
	w: WeightScheme | np.ndarray,
	opts: SolverOptions | None = None,
	success_tol: float | None = None,
) -> RecoveryResult:
	"""
	Weighted l1 recovery of instance.x_true from (A, y). Only an Optimal LP
	can count as a success; other statuses are kept on the result.
	"""
	weights = as_weights(w, instance.n)
	x_hat, sol = solve_weighted_l1(instance.A, instance.y, weights, opts)

	success, error = is_success(x_hat, instance.x_true.x, success_tol)
	if not sol.optimal:
		success = False

	return RecoveryResult(
		x_hat=x_hat,
		objective=weighted_norm(x_hat, weights),
		status=sol.status,
		success=success,
		max_abs_error=error,
		degenerate=sol.degenerate,
		iterations=sol.iterations,
	)


def recover_l1(instance: ProblemInstance, opts: SolverOptions | None = None, success_tol: float | None = None) -> RecoveryResult:
	"""Plain l1 minimization."""
	return recover(instance, WeightScheme.uniform(instance.n), opts, success_tol)


def _check_support(K, n: int) -> np.ndarray:
	K = np.unique(np.asarray(K, dtype=int))
	if K.size and (K.min() < 0 or K.max() >= n):
		throw(f"Support indices must lie in 0..{n - 1}", ValidationError)
	return K


def _orthant_lp(R: np.ndarray, K: np.ndarray, Kc: np.ndarray, signs: np.ndarray, weights: np.ndarray) -> LinearProgram:
	"""
	min sum_{not K} w_i (p_i + q_i) over z in null(A) with z_K = signs * v,
	v >= 0, z_{not K} = p - q and sum_K w_i v_i = 1.

	R spans the row space of A, so R^T z = 0 is the null-space constraint.
	"""
	k, r = K.size, R.shape[1]
	Rk = R[K].T * signs
	Rc = R[Kc].T
	E = np.zeros((r + 1, k + 2 * Kc.size))
	E[:r, :k] = Rk
	E[:r, k : k + Kc.size] = Rc
	E[:r, k + Kc.size :] = -Rc
	E[r, :k] = weights[K]

	d = np.zeros(r + 1)
	d[r] = 1.0
	c = np.concatenate([np.zeros(k), weights[Kc], weights[Kc]])
	return LinearProgram(c=c, E=E, d=d)


def _orthant_feasible(lp: LinearProgram) -> bool:
	try:
		_, residual = optimize.nnls(lp.E, lp.d)
	except RuntimeError:
		# nnls ran out of iterations; leave the verdict to the LP
		return True
	return residual <= ORTHANT_RESIDUAL_TOL * (1.0 + np.linalg.norm(lp.d))


def _orthant_minimum(R, K, Kc, signs, weights, opts: SolverOptions) -> float:
	lp = _orthant_lp(R, K, Kc, signs, weights)
	if not _orthant_feasible(lp):
		return np.inf
	sol = solve(lp, opts)
	if sol.status is LpStatus.INFEASIBLE:
		# no null-space vector has this sign pattern on K
		return np.inf
	if not sol.optimal:
		log.warning("orthant LP ended with status %s, counted as a violation", sol.status.value)
		return 0.0
	return sol.objective


def _sign_vectors(n: int):
	"""All sign vectors with a leading +1 (s and -s give the same LP)."""
	for tail in itertools.product((1.0, -1.0), repeat=n - 1):
		yield np.array((1.0, *tail))


def nullspace_margin(
	A,
	K,
	w: WeightScheme | np.ndarray,
	*,
	cap: int | None = None,
	n_jobs: int = 1,
	opts: SolverOptions | None = None,
) -> float:
	"""
	min over z in null(A) with sum_K w|z| = 1 of sum_{not K} w|z|, minus 1.

	The coordinates off K enter through |z_i| = p_i + q_i, so only the sign
	orthants of z_K need to be searched: one LP per sign pattern on K, and
	a pattern and its negation give the same LP. inf when null(A) is
	trivial or K is empty.
	"""
	A = np.atleast_2d(np.asarray(A, dtype=float))
	m, n = A.shape
	cap = get_settings().nullspace_cap if cap is None else cap
	if n > cap:
		throw(f"Exact null-space check is limited to n <= {cap}, got n={n}", CapExceeded)

	weights = as_weights(w, n)
	K = _check_support(K, n)

	N = scipy.linalg.null_space(A)
	if N.shape[1] == 0 or K.size == 0:
		return np.inf
	if K.size == n:
		return -1.0

	R = scipy.linalg.orth(A.T)
	Kc = np.setdiff1d(np.arange(n), K)
	opts = opts or SolverOptions.from_settings()

	if n_jobs == 1:
		minima = [_orthant_minimum(R, K, Kc, signs, weights, opts) for signs in _sign_vectors(K.size)]
	else:
		minima = Parallel(n_jobs=n_jobs)(
			delayed(_orthant_minimum)(R, K, Kc, signs, weights, opts) for signs in _sign_vectors(K.size)
		)

	worst = float(min(minima))
	log.debug("null-space check n=%d |K|=%d: smallest orthant minimum %.6g", n, K.size, worst)
	return worst - 1.0


def nullspace_condition(A, K, w: WeightScheme | np.ndarray, **kwargs) -> bool:
	"""True iff sum_K w|z| <= sum_{not K} w|z| for every z in the null space of A."""
	return bool(nullspace_margin(A, K, w, **kwargs) >= -VIOLATION_TOL)


def sign_pattern_recoveries(A, K, w: WeightScheme | np.ndarray, opts: SolverOptions | None = None, success_tol: float | None = None) -> list[bool]:
	"""Recovery outcome for the unit-magnitude signal on K with each of the 2^|K| sign patterns."""
	A = np.atleast_2d(np.asarray(A, dtype=float))
	n = A.shape[1]
	weights = as_weights(w, n)
	K = _check_support(K, n)

	outcomes = []
	for pattern in itertools.product((1.0, -1.0), repeat=K.size):
		x = np.zeros(n)
		x[K] = pattern
		x_hat, sol = solve_weighted_l1(A, A @ x, weights, opts)
		success, _ = is_success(x_hat, x, success_tol)
		outcomes.append(bool(success and sol.optimal))
	return outcomes


def all_sign_patterns_recovered(A, K, w: WeightScheme | np.ndarray, **kwargs) -> bool:
	return all(sign_pattern_recoveries(A, K, w, **kwargs))


def recovery_oracle_bruteforce(A, y, w: WeightScheme | np.ndarray, cap: int | None = None) -> np.ndarray:
	"""
	Weighted l1 minimizer by enumerating every basic solution of the split
	LP; the least weighted objective wins. Raises InfeasibleProblem when y
	is outside the range of A.
	"""
	A = np.atleast_2d(np.asarray(A, dtype=float))
	m, n = A.shape
	cap = get_settings().bruteforce_cap if cap is None else cap
	if n > cap or m > cap:
		throw(f"Brute-force oracle is limited to n, m <= {cap}, got {m}x{n}", CapExceeded)
	if len(np.ravel(y)) != m:
		throw(f"y has length {len(np.ravel(y))}, expected {m}", DimensionMismatch)

	lp = build_weighted_l1_lp(A, y, as_weights(w, n))
	x_std, _ = enumerate_basic_solutions(lp, cap=2 * cap)
	return split_solution(x_std)
