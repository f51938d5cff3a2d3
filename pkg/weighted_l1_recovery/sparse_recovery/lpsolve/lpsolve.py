# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
Dense primal-dual interior point solver (Mehrotra predictor-corrector) for

	minimize c'x  subject to  E x = d,  x >= lb

plus the split formulation of weighted l1 minimization and a brute-force
basic-solution enumerator used to certify the solver on tiny problems.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError

from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import CapExceeded, DimensionMismatch, InfeasibleProblem, ValidationError, throw
from weighted_l1_recovery.utils.logger import logger

log = logger("lpsolve")

RANK_TOL = 1e-10
# Certificate thresholds: a ray r with |E'r| (or |E r|) below CERT_ZERO and an
# objective improvement above CERT_GAIN proves infeasibility (unboundedness).
CERT_ZERO = 1e-12
CERT_GAIN = 1e-6


class LpStatus(str, Enum):
	OPTIMAL = "Optimal"
	INFEASIBLE = "Infeasible"
	UNBOUNDED = "Unbounded"
	ITER_LIMIT = "IterLimit"
	NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True, eq=False)
class LinearProgram:
	c: np.ndarray
	E: np.ndarray
	d: np.ndarray
	lb: np.ndarray | None = None

	def __post_init__(self):
		c = np.asarray(self.c, dtype=float)
		E = np.atleast_2d(np.asarray(self.E, dtype=float))
		d = np.asarray(self.d, dtype=float).ravel()
		lb = np.zeros_like(c) if self.lb is None else np.asarray(self.lb, dtype=float)

		if c.ndim != 1 or E.shape != (len(d), len(c)) or lb.shape != c.shape:
			throw(
				f"Inconsistent LP shapes: c {c.shape}, E {E.shape}, d {d.shape}, lb {lb.shape}",
				DimensionMismatch,
			)
		if np.any(np.isnan(lb)) or np.any(lb == np.inf):
			throw("Lower bounds must be finite or -inf", ValidationError)

		object.__setattr__(self, "c", c)
		object.__setattr__(self, "E", E)
		object.__setattr__(self, "d", d)
		object.__setattr__(self, "lb", lb)

	@property
	def n_vars(self) -> int:
		return len(self.c)

	@property
	def n_rows(self) -> int:
		return len(self.d)


@dataclass
class SolverOptions:
	tol_feas: float = 1e-8
	tol_gap: float = 1e-8
	max_iter: int = 200
	step_fraction: float = 0.995

	@classmethod
	def from_settings(cls, **overrides) -> SolverOptions:
		settings = get_settings()
		values = {
			"tol_feas": settings.tol_feas,
			"tol_gap": settings.tol_gap,
			"max_iter": settings.max_iter,
			"step_fraction": settings.step_fraction,
		}
		values.update({k: v for k, v in overrides.items() if v is not None})
		return cls(**values)


@dataclass(eq=False)
class LpSolution:
	x: np.ndarray
	y: np.ndarray
	z: np.ndarray
	objective: float
	status: LpStatus
	iterations: int
	primal_residual: float
	dual_residual: float
	gap: float
	degenerate: bool = False
	message: str = ""
	dual_objective: float = field(default=float("nan"))

	@property
	def optimal(self) -> bool:
		return self.status is LpStatus.OPTIMAL


@dataclass
class _StandardForm:
	"""min c'x, A x = b, x >= 0, with the map back to the caller's variables."""

	A: np.ndarray
	b: np.ndarray
	c: np.ndarray
	c0: float
	pos: np.ndarray
	neg: np.ndarray
	shift: np.ndarray

	def free_pairs(self) -> tuple[np.ndarray, np.ndarray] | None:
		has_neg = self.neg >= 0
		if not np.any(has_neg):
			return None
		return self.pos[has_neg], self.neg[has_neg]

	def original_x(self, x_std: np.ndarray) -> np.ndarray:
		x = x_std[self.pos] + self.shift
		has_neg = self.neg >= 0
		x[has_neg] -= x_std[self.neg[has_neg]]
		return x


def _standard_form(lp: LinearProgram) -> _StandardForm:
	free = np.isneginf(lp.lb)
	n = lp.n_vars
	pos = np.arange(n)
	neg = np.full(n, -1)
	neg[free] = n + np.arange(np.count_nonzero(free))

	shift = np.where(free, 0.0, lp.lb)
	A = np.hstack([lp.E, -lp.E[:, free]])
	c = np.concatenate([lp.c, -lp.c[free]])
	b = lp.d - lp.E @ shift
	return _StandardForm(A=A, b=b, c=c, c0=float(lp.c @ shift), pos=pos, neg=neg, shift=shift)


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray | None:
	"""
	Row indices of a maximal independent subset of the nonzero rows of A.
	None when a zero or dependent row is inconsistent with b.
	"""
	scale = 1.0 + np.linalg.norm(b, np.inf)
	zero = ~np.any(A != 0, axis=1)
	if np.any(np.abs(b[zero]) > tol * scale):
		return None

	keep = np.flatnonzero(~zero)
	if keep.size == 0:
		return keep

	_, R, piv = scipy.linalg.qr(A[keep].T, mode="economic", pivoting=True)
	diag = np.abs(np.diag(R))
	rank = int(np.count_nonzero(diag > RANK_TOL * diag[0]))
	if rank == keep.size:
		return keep

	rows = keep[np.sort(piv[:rank])]
	x_ls = np.linalg.lstsq(A[rows], b[rows], rcond=None)[0]
	residual = np.linalg.norm(A[keep] @ x_ls - b[keep], np.inf)
	bound = tol * (scale + np.linalg.norm(A, np.inf) * np.linalg.norm(x_ls, np.inf))
	if residual > bound:
		return None
	return rows


def _factor(M: np.ndarray):
	"""Cholesky factor of the normal matrix, with a small diagonal shift on failure."""
	if not np.all(np.isfinite(M)):
		return None

	eye = np.eye(len(M))
	scale = max(1.0, float(np.trace(M)) / len(M))
	for reg in (0.0, 1e-14, 1e-11, 1e-8):
		try:
			return scipy.linalg.cho_factor(M + reg * scale * eye, check_finite=False)
		except LinAlgError:
			continue
	return None


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
	neg = dv < 0
	if not np.any(neg):
		return np.inf
	return float(np.min(-v[neg] / dv[neg]))


def _direction(A, x, s, rp, rd, rc, factor):
	"""Newton direction for A dx = rp, A'dy + ds = rd, S dx + X ds = rc."""
	d = x / s
	rhs = rp + A @ (d * rd - rc / s)
	dy = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
	ds = rd - A.T @ dy
	dx = (rc - x * ds) / s
	return dx, dy, ds


def _starting_point(A, b, c):
	"""Least-squares start shifted into the positive orthant."""
	factor = _factor(A @ A.T)
	if factor is None:
		return None

	x = A.T @ scipy.linalg.cho_solve(factor, b, check_finite=False)
	y = scipy.linalg.cho_solve(factor, A @ c, check_finite=False)
	s = c - A.T @ y

	x = x + max(-1.5 * float(x.min()), 0.0)
	s = s + max(-1.5 * float(s.min()), 0.0)

	xs = float(x @ s)
	if xs <= np.finfo(float).tiny or x.sum() <= 0 or s.sum() <= 0:
		return x + 1.0, y, s + 1.0

	dx = 0.5 * xs / s.sum()
	ds = 0.5 * xs / x.sum()
	x, s = x + dx, s + ds
	if np.any(x <= 0) or np.any(s <= 0):
		x, s = x + 1.0, s + 1.0
	return x, y, s


def _infeasibility_ray(A, b, y) -> bool:
	"""y/|y| with A'y <= 0 and b'y > 0 proves A x = b, x >= 0 empty."""
	ny = np.linalg.norm(y, np.inf)
	if ny == 0 or not np.isfinite(ny):
		return False
	r = y / ny
	return float(b @ r) > CERT_GAIN * (1.0 + np.linalg.norm(b, np.inf)) and float(np.max(A.T @ r)) <= CERT_ZERO * (
		1.0 + np.linalg.norm(A, np.inf)
	)


def _unbounded_ray(A, c, x) -> bool:
	"""x/|x| >= 0 with A x ~ 0 and c'x < 0 is a direction of unbounded descent."""
	nx = np.linalg.norm(x, np.inf)
	if nx == 0 or not np.isfinite(nx):
		return False
	r = x / nx
	return float(c @ r) < -CERT_GAIN * (1.0 + np.linalg.norm(c, np.inf)) and np.linalg.norm(A @ r, np.inf) <= CERT_ZERO * (
		1.0 + np.linalg.norm(A, np.inf)
	)


def _recentre_pairs(x: np.ndarray, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
	"""
	Pull both parts of each split free variable down by the same amount.
	The difference, and so A x and c'x, is unchanged.
	"""
	t = np.minimum(x[plus], x[minus])
	cap = np.maximum(1.0, np.abs(x[plus] - x[minus]))
	cut = np.maximum(t - cap, 0.0)
	if np.any(cut > 0):
		x = x.copy()
		x[plus] -= cut
		x[minus] -= cut
	return x


def _mehrotra(A, b, c, opts: SolverOptions, pairs: tuple[np.ndarray, np.ndarray] | None = None):
	"""
	Returns (status, x, y, s, iterations, rel_p, rel_d, gap). `pairs` holds the
	column indices (plus, minus) of split free variables.
	"""
	N = A.shape[1]
	bnorm = 1.0 + np.linalg.norm(b)
	cnorm = 1.0 + np.linalg.norm(c)

	start = _starting_point(A, b, c)
	if start is None:
		return LpStatus.NUMERICAL_FAILURE, np.zeros(N), np.zeros(len(b)), np.zeros(N), 0, np.inf, np.inf, np.inf
	x, y, s = start

	rel_p = rel_d = gap = np.inf
	for it in range(opts.max_iter + 1):
		rp = b - A @ x
		rd = c - A.T @ y - s
		pobj = float(c @ x)
		dobj = float(b @ y)
		rel_p = np.linalg.norm(rp) / bnorm
		rel_d = np.linalg.norm(rd) / cnorm
		gap = abs(pobj - dobj) / (1.0 + abs(pobj))

		if not (np.isfinite(rel_p) and np.isfinite(rel_d) and np.isfinite(gap)):
			return LpStatus.NUMERICAL_FAILURE, x, y, s, it, rel_p, rel_d, gap
		if rel_p <= opts.tol_feas and rel_d <= opts.tol_feas and gap <= opts.tol_gap:
			return LpStatus.OPTIMAL, x, y, s, it, rel_p, rel_d, gap
		if _infeasibility_ray(A, b, y):
			return LpStatus.INFEASIBLE, x, y, s, it, rel_p, rel_d, gap
		if _unbounded_ray(A, c, x):
			return LpStatus.UNBOUNDED, x, y, s, it, rel_p, rel_d, gap
		if it == opts.max_iter:
			break

		log.debug("iter %d: pobj=%.10g dobj=%.10g rp=%.2e rd=%.2e gap=%.2e", it, pobj, dobj, rel_p, rel_d, gap)

		mu = float(x @ s) / N
		factor = _factor((A * (x / s)) @ A.T)
		if factor is None:
			return LpStatus.NUMERICAL_FAILURE, x, y, s, it, rel_p, rel_d, gap

		# predictor
		dx, dy, ds = _direction(A, x, s, rp, rd, -x * s, factor)
		ap = min(1.0, _max_step(x, dx))
		ad = min(1.0, _max_step(s, ds))
		mu_aff = float((x + ap * dx) @ (s + ad * ds)) / N
		sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0

		# corrector
		dx, dy, ds = _direction(A, x, s, rp, rd, -x * s - dx * ds + sigma * mu, factor)
		ap = min(1.0, opts.step_fraction * _max_step(x, dx))
		ad = min(1.0, opts.step_fraction * _max_step(s, ds))

		x = x + ap * dx
		y = y + ad * dy
		s = s + ad * ds
		if pairs is not None:
			x = _recentre_pairs(x, *pairs)

	return LpStatus.ITER_LIMIT, x, y, s, opts.max_iter, rel_p, rel_d, gap


def solve(lp: LinearProgram, opts: SolverOptions | None = None) -> LpSolution:
	"""Solve `lp`; non-optimal outcomes are reported in LpSolution.status."""
	opts = opts or SolverOptions.from_settings()
	std = _standard_form(lp)

	rows = _independent_rows(std.A, std.b, opts.tol_feas)
	if rows is None:
		return _result(lp, std, LpStatus.INFEASIBLE, None, None, None, np.arange(0), 0, np.inf, np.inf, np.inf, opts)

	A, b = std.A[rows], std.b[rows]
	if len(rows) == 0:
		# no constraints left: x = 0 is optimal iff c >= 0
		N = len(std.c)
		status = LpStatus.OPTIMAL if np.all(std.c >= 0) else LpStatus.UNBOUNDED
		return _result(lp, std, status, np.zeros(N), np.zeros(0), std.c.copy(), rows, 0, 0.0, 0.0, 0.0, opts)

	status, x, y, s, iterations, rel_p, rel_d, gap = _mehrotra(A, b, std.c, opts, std.free_pairs())
	if status is not LpStatus.OPTIMAL:
		log.debug("LP ended with %s after %d iterations", status.value, iterations)
	return _result(lp, std, status, x, y, s, rows, iterations, rel_p, rel_d, gap, opts)


def _result(lp, std, status, x, y, s, rows, iterations, rel_p, rel_d, gap, opts) -> LpSolution:
	N = len(std.c)
	x = np.zeros(N) if x is None else x
	s = np.zeros(N) if s is None else s

	y_full = np.zeros(lp.n_rows)
	if y is not None and len(rows):
		y_full[rows] = y

	x_orig = std.original_x(x)
	degenerate = False
	if status is LpStatus.OPTIMAL:
		thr = np.sqrt(opts.tol_gap)
		small_x = x < thr * (1.0 + np.linalg.norm(x, np.inf))
		small_s = s < thr * (1.0 + np.linalg.norm(s, np.inf))
		degenerate = bool(np.any(small_x & small_s))

	return LpSolution(
		x=x_orig,
		y=y_full,
		z=lp.c - lp.E.T @ y_full,
		objective=float(lp.c @ x_orig),
		status=status,
		iterations=int(iterations),
		primal_residual=float(np.linalg.norm(lp.E @ x_orig - lp.d)),
		dual_residual=float(rel_d),
		gap=float(gap),
		degenerate=degenerate,
		message="" if status is LpStatus.OPTIMAL else f"{status.value} after {iterations} iterations",
		dual_objective=float((lp.d - lp.E @ std.shift) @ y_full + std.c0),
	)


def build_weighted_l1_lp(A, y, w) -> LinearProgram:
	"""
	minimize sum_i w_i (u_i + v_i)  s.t.  A (u - v) = y,  u, v >= 0.

	Variables are ordered (u, v); x = u - v, see split_solution.
	"""
	A = np.atleast_2d(np.asarray(A, dtype=float))
	y = np.asarray(y, dtype=float).ravel()
	weights = np.asarray(getattr(w, "weights", w), dtype=float).ravel()
	m, n = A.shape

	if len(y) != m or len(weights) != n:
		throw(f"A is {m}x{n}, y has length {len(y)}, weights have length {len(weights)}", DimensionMismatch)
	if not np.all(weights > 0):
		throw("weights must be strictly positive", ValidationError)

	return LinearProgram(c=np.concatenate([weights, weights]), E=np.hstack([A, -A]), d=y, lb=np.zeros(2 * n))


def split_solution(x_std: np.ndarray) -> np.ndarray:
	"""u - v for the (u, v) variable vector of build_weighted_l1_lp."""
	n = len(x_std) // 2
	return x_std[:n] - x_std[n:]


def enumerate_basic_solutions(lp: LinearProgram, cap: int | None = None) -> tuple[np.ndarray, float]:
	"""
	Best basic feasible solution of a bounded LP with x >= 0, by trying every
	basis. Raises InfeasibleProblem when no basic solution is feasible.
	"""
	cap = 2 * get_settings().bruteforce_cap if cap is None else cap
	if lp.n_vars > cap:
		throw(f"Basis enumeration is limited to {cap} variables, got {lp.n_vars}", CapExceeded)
	if np.any(lp.lb != 0):
		throw("Basis enumeration expects x >= 0", ValidationError)

	tol = 1e-9
	rows = _independent_rows(lp.E, lp.d, tol)
	if rows is None:
		throw("Equality system is inconsistent", InfeasibleProblem)

	E, d = lp.E[rows], lp.d[rows]
	r = len(rows)
	scale = 1.0 + np.linalg.norm(lp.d, np.inf)
	best_x, best_obj = None, np.inf

	for cols in itertools.combinations(range(lp.n_vars), r):
		cols = list(cols)
		x = np.zeros(lp.n_vars)
		if r:
			B = E[:, cols]
			if np.linalg.cond(B) > 1e12:
				continue
			x[cols] = np.linalg.solve(B, d)
		if np.any(x < -tol * scale) or np.linalg.norm(lp.E @ x - lp.d, np.inf) > tol * scale * 10:
			continue
		x = np.maximum(x, 0.0)
		obj = float(lp.c @ x)
		if obj < best_obj - tol * (1.0 + abs(best_obj) if np.isfinite(best_obj) else 1.0):
			best_x, best_obj = x, obj

	if best_x is None:
		throw("No feasible basic solution", InfeasibleProblem)
	return best_x, best_obj


def _fixed(values, per_line: int = 4) -> list[str]:
	values = list(values)
	return ["".join(f"{v:20.12e}" for v in values[i : i + per_line]) for i in range(0, len(values), per_line)] or [""]


def dump_lp(lp: LinearProgram, path: str | Path) -> Path:
	"""Fixed-format text dump: one number per 20-character field."""
	lines = [f"LP {lp.n_rows} ROWS {lp.n_vars} COLUMNS", "OBJECTIVE", *_fixed(lp.c), "ROWS"]
	for i, row in enumerate(lp.E):
		lines.append(f"ROW {i}")
		lines.extend(_fixed(row))
	lines += ["RHS", *_fixed(lp.d), "BOUNDS", *_fixed(lp.lb), "END"]

	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	path.write_text("\n".join(lines) + "\n")
	return path
