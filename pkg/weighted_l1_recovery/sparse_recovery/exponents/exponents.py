# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
Asymptotic exponents of the union-bound terms, per unit n:

	psi(t1', t2') = psi_com - psi_int - psi_ext

with t_i' = t_i / n. psi is at most 0 and peaks at 0; a configuration is
recoverable when the peak lies below the admissible region
t1' + t2' > delta - (gamma1 P1 + gamma2 P2).
On top of that: the P1 threshold by bisection and the optimal second-class
weight by golden-section search.

The internal exponent is evaluated at the real saddle point -sigma of

	Omega s^2 / 2 + t1' L(s) + t2' L(W s),   L the half-normal CGF,

which is the convex dual of (L*(y) + m y^2 / (2 Omega) + log 2)(t1' + t2')
with m = t1' + t2' (FACE_EXCESS_NORMALIZATION) and Omega = gamma1 P1 +
W^2 gamma2 P2. The two forms agree at y = sigma Omega / (t1' + t2').
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import DomainError, ValidationError, throw
from weighted_l1_recovery.utils.logger import logger
from weighted_l1_recovery.utils.numerics import (
	LOG2,
	binary_entropy,
	bracket_increasing,
	external_stationarity,
	half_normal_cgf,
	internal_stationarity,
	log_erf,
	solve_increasing,
)

log = logger("exponents")

# Meaning of the dimension ratio m in the internal exponent: the face excess
# t1' + t2'. Also tried: m = delta and m = 1; both miss the finite-n angles
# by far more than the O(log n / n) gap.
FACE_EXCESS_NORMALIZATION = "t1p + t2p"

# D_i below this is an empty class of outside indices.
D_FLOOR = 1e-14
RANGE_SLACK = 1e-12
SURFACE_COLUMNS = ["t1p", "t2p", "psi_com", "psi_int", "psi_ext", "psi_total"]


@dataclass(frozen=True)
class AsymptoticConfig:
	delta: float
	gamma1: float
	gamma2: float
	P1: float
	P2: float
	W: float = 1.0

	def __post_init__(self):
		if not 0.0 < self.delta < 1.0:
			throw(f"delta must lie in (0, 1), got {self.delta!r}", ValidationError)
		if self.gamma1 < 0 or self.gamma2 < 0 or abs(self.gamma1 + self.gamma2 - 1.0) > 1e-12:
			throw(f"gamma1, gamma2 must be non-negative and sum to 1, got ({self.gamma1}, {self.gamma2})", ValidationError)
		for name in ("P1", "P2"):
			value = getattr(self, name)
			if not 0.0 <= value <= 1.0:
				throw(f"{name} must lie in [0, 1], got {value!r}", ValidationError)
		if not self.W > 0:
			throw(f"W must be positive, got {self.W!r}", ValidationError)

	def replace(self, **changes) -> AsymptoticConfig:
		return dataclasses.replace(self, **changes)

	@property
	def extent1(self) -> float:
		"""Upper end of the t1' range."""
		return self.gamma1 * (1.0 - self.P1)

	@property
	def extent2(self) -> float:
		return self.gamma2 * (1.0 - self.P2)

	@property
	def support(self) -> float:
		"""k / n."""
		return self.gamma1 * self.P1 + self.gamma2 * self.P2

	@property
	def omega(self) -> float:
		return self.gamma1 * self.P1 + self.W**2 * self.gamma2 * self.P2


@dataclass
class ExponentPoint:
	t1p: float
	t2p: float
	psi_com: float
	psi_int: float
	psi_ext: float
	psi_total: float
	diagnostics: dict = field(default_factory=dict)


def _check_range(t1p, t2p, cfg: AsymptoticConfig) -> tuple[np.ndarray, np.ndarray]:
	t1p = np.asarray(t1p, dtype=float)
	t2p = np.asarray(t2p, dtype=float)
	if (
		np.any(t1p < 0)
		or np.any(t2p < 0)
		or np.any(t1p > cfg.extent1 + RANGE_SLACK)
		or np.any(t2p > cfg.extent2 + RANGE_SLACK)
	):
		throw(
			f"(t1p, t2p) must lie in [0, {cfg.extent1:g}] x [0, {cfg.extent2:g}]",
			DomainError,
			t1p=np.atleast_1d(t1p).tolist()[:5],
			t2p=np.atleast_1d(t2p).tolist()[:5],
		)
	return np.minimum(t1p, cfg.extent1), np.minimum(t2p, cfg.extent2)


def _entropy_term(t, extent: float):
	if extent <= 0:
		return np.zeros_like(t)
	return extent * binary_entropy(t / extent)


def psi_com(t1p, t2p, cfg: AsymptoticConfig):
	"""(t1' + t2') log 2 plus the entropies of choosing t_i' out of gamma_i (1 - P_i)."""
	t1p, t2p = _check_range(t1p, t2p, cfg)
	return (t1p + t2p) * LOG2 + _entropy_term(t1p, cfg.extent1) + _entropy_term(t2p, cfg.extent2)


def _external(t1p, t2p, cfg: AsymptoticConfig):
	"""(psi_ext, x0, relative residual); psi_ext = 0 where no index is left outside."""
	W = cfg.W
	C = t1p + cfg.gamma1 * cfg.P1 + W * W * (t2p + cfg.gamma2 * cfg.P2)
	D1 = cfg.extent1 - t1p
	D2 = cfg.extent2 - t2p
	D1 = np.where(D1 < D_FLOOR, 0.0, D1)
	D2 = np.where(D2 < D_FLOOR, 0.0, D2)

	empty = (D1 == 0) & (D2 == 0)
	if np.any(~empty & ~(C > 0)):
		throw("External exponent needs C > 0", DomainError)
	# placeholder data on empty points keeps the vectorized solve well posed
	C_ = np.where(empty, 1.0, C)
	D1_ = np.where(empty, 1.0, D1)

	def fun(x):
		return external_stationarity(x, C_, D1_, D2, W)

	lo, hi = bracket_increasing(fun, np.full(C_.shape, 1e-12), np.ones(C_.shape))
	x0 = solve_increasing(fun, lo, hi)
	residual = np.abs(fun(x0)[0]) / (2.0 * C_)

	with np.errstate(invalid="ignore"):
		value = C_ * x0 * x0 - D1_ * log_erf(x0) - np.where(D2 > 0, D2 * log_erf(W * x0), 0.0)
	return np.where(empty, 0.0, value), np.where(empty, np.inf, x0), np.where(empty, 0.0, residual)


def psi_ext(t1p, t2p, cfg: AsymptoticConfig):
	"""
	C x0^2 - D1 log G(x0) - D2 log G(W x0), G = erf, with x0 the root of
	2C - D1 q(x) - W^2 D2 q(W x) and q(x) = G'(x) / (x G(x)).
	"""
	t1p, t2p = _check_range(t1p, t2p, cfg)
	return _external(t1p, t2p, cfg)[0]


def _internal(t1p, t2p, cfg: AsymptoticConfig):
	"""(psi_int, sigma, relative residual); psi_int = 0 where t1' + t2' = 0."""
	omega, W = cfg.omega, cfg.W
	if not omega > 0:
		throw("Internal exponent needs a support with positive weight (P1 = P2 = 0)", DomainError)

	tau = t1p + t2p
	empty = tau <= 0
	t1_ = np.where(empty, 1.0, t1p)

	def fun(sigma):
		return internal_stationarity(sigma, omega, t1_, t2p, W)

	hi = np.sqrt((t1_ + W * W * t2p) / omega) + 1.0
	lo, hi = bracket_increasing(fun, np.zeros(hi.shape), hi)
	sigma = solve_increasing(fun, lo, hi)
	residual = np.abs(fun(sigma)[0]) / (omega + t1_ + W * W * t2p)

	saddle = 0.5 * omega * sigma**2 + t1_ * half_normal_cgf(-sigma) + t2p * half_normal_cgf(-W * sigma)
	value = tau * LOG2 - saddle
	return np.where(empty, 0.0, value), np.where(empty, 0.0, sigma), np.where(empty, 0.0, residual)


def psi_int(t1p, t2p, cfg: AsymptoticConfig):
	"""Internal exponent; t1' + t2' must be positive."""
	t1p, t2p = _check_range(t1p, t2p, cfg)
	if np.any(t1p + t2p <= 0):
		throw("psi_int needs t1p + t2p > 0; the internal angle of a face with itself is 1", DomainError)
	return _internal(t1p, t2p, cfg)[0]


def exponent_point(t1p: float, t2p: float, cfg: AsymptoticConfig) -> ExponentPoint:
	t1, t2 = _check_range(t1p, t2p, cfg)
	com = float(psi_com(t1, t2, cfg))
	ext, x0, ext_res = (float(v) for v in _external(t1, t2, cfg))
	internal, sigma, int_res = (float(v) for v in _internal(t1, t2, cfg))

	tau = float(t1 + t2)
	diagnostics = {"x0": x0, "x0_residual": ext_res, "s_star": -sigma, "s_star_residual": int_res}
	if tau > 0:
		diagnostics["y"] = sigma * cfg.omega / tau
	return ExponentPoint(
		t1p=float(t1),
		t2p=float(t2),
		psi_com=com,
		psi_int=internal,
		psi_ext=ext,
		psi_total=com - internal - ext,
		diagnostics=diagnostics,
	)


def _axis(extent: float, size: int) -> np.ndarray:
	if extent <= 0:
		return np.zeros(1)
	return np.linspace(0.0, extent, size)


@dataclass(eq=False)
class ExponentSurface:
	cfg: AsymptoticConfig
	t1p: np.ndarray = field(repr=False)
	t2p: np.ndarray = field(repr=False)
	psi_com: np.ndarray = field(repr=False)
	psi_int: np.ndarray = field(repr=False)
	psi_ext: np.ndarray = field(repr=False)
	psi_total: np.ndarray = field(repr=False)
	admissible: np.ndarray = field(repr=False)

	def max_point(self) -> ExponentPoint:
		"""Grid point of largest psi_total inside the admissible region."""
		masked = np.where(self.admissible, self.psi_total, -np.inf)
		i, j = np.unravel_index(np.argmax(masked), masked.shape)
		return exponent_point(self.t1p[i], self.t2p[j], self.cfg)

	def to_rows(self, admissible_only: bool = True) -> list[list[float]]:
		rows = []
		for i, j in np.ndindex(self.psi_total.shape):
			if admissible_only and not self.admissible[i, j]:
				continue
			rows.append(
				[
					float(self.t1p[i]),
					float(self.t2p[j]),
					float(self.psi_com[i, j]),
					float(self.psi_int[i, j]),
					float(self.psi_ext[i, j]),
					float(self.psi_total[i, j]),
				]
			)
		return rows


def exponent_surface(cfg: AsymptoticConfig, grid_size: int | None = None) -> ExponentSurface:
	"""All three exponents on a grid_size x grid_size grid over the (t1', t2') rectangle."""
	grid_size = get_settings().grid_size if grid_size is None else int(grid_size)
	if grid_size < 2:
		throw(f"grid_size must be at least 2, got {grid_size}", ValidationError)

	t1 = _axis(cfg.extent1, grid_size)
	t2 = _axis(cfg.extent2, grid_size)
	T1, T2 = np.meshgrid(t1, t2, indexing="ij")

	com = psi_com(T1, T2, cfg)
	ext = _external(T1, T2, cfg)[0]
	internal = _internal(T1, T2, cfg)[0]
	return ExponentSurface(
		cfg=cfg,
		t1p=t1,
		t2p=t2,
		psi_com=com,
		psi_int=internal,
		psi_ext=ext,
		psi_total=com - internal - ext,
		admissible=(T1 + T2) > cfg.delta - cfg.support,
	)


class Recoverability(NamedTuple):
	recoverable: bool
	max_psi: float
	t1p: float
	t2p: float
	near_threshold: bool
	surface: ExponentSurface | None
	face_excess: float = 0.0


def _negated(cfg: AsymptoticConfig):
	def objective(p) -> float:
		return -exponent_point(p[0], p[1], cfg).psi_total

	return objective


def _peak(cfg: AsymptoticConfig, surface: ExponentSurface) -> ExponentPoint:
	"""Unconstrained maximizer of psi_total: grid argmax, then a bounded local search."""
	i, j = np.unravel_index(np.argmax(surface.psi_total), surface.psi_total.shape)
	t1, t2 = float(surface.t1p[i]), float(surface.t2p[j])
	objective = _negated(cfg)
	options = {"xatol": 1e-10}

	if cfg.extent1 > 0 and cfg.extent2 > 0:
		res = optimize.minimize(
			objective,
			x0=[t1, t2],
			method="Nelder-Mead",
			bounds=[(0.0, cfg.extent1), (0.0, cfg.extent2)],
			options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 800},
		)
		t1, t2 = (float(v) for v in res.x)
	elif cfg.extent1 > 0:
		res = optimize.minimize_scalar(lambda t: objective((t, 0.0)), bounds=(0.0, cfg.extent1), options=options)
		t1 = float(res.x)
	elif cfg.extent2 > 0:
		res = optimize.minimize_scalar(lambda t: objective((0.0, t)), bounds=(0.0, cfg.extent2), options=options)
		t2 = float(res.x)

	best = exponent_point(t1, t2, cfg)
	start = exponent_point(float(surface.t1p[i]), float(surface.t2p[j]), cfg)
	return best if best.psi_total >= start.psi_total else start


def _boundary_max(cfg: AsymptoticConfig, floor: float) -> ExponentPoint:
	"""Largest psi_total on the segment t1' + t2' = floor."""
	lo = max(0.0, floor - cfg.extent2)
	hi = min(cfg.extent1, floor)

	def split(t1: float) -> tuple[float, float]:
		return t1, min(max(floor - t1, 0.0), cfg.extent2)

	if hi - lo <= RANGE_SLACK:
		return exponent_point(*split(lo), cfg)
	objective = _negated(cfg)
	res = optimize.minimize_scalar(lambda t: objective(split(t)), bounds=(lo, hi), options={"xatol": 1e-10})
	return exponent_point(*split(float(res.x)), cfg)


def recoverable(cfg: AsymptoticConfig, margin: float = 0.0, grid_size: int | None = None) -> Recoverability:
	"""
	psi_total is non-positive on the whole rectangle and reaches 0 at a single
	point, since the union-bound terms over all faces sum to one. The admissible
	maximum is strictly negative iff that peak lies below delta - (gamma1 P1 +
	gamma2 P2), so the verdict is read from the peak location. A positive margin
	also asks for max psi_total < -margin over the admissible region.
	"""
	if margin < 0:
		throw(f"margin must be non-negative, got {margin!r}", ValidationError)
	band = get_settings().near_threshold_band

	if cfg.P1 == 0 and cfg.P2 == 0:
		return Recoverability(True, -np.inf, 0.0, 0.0, False, None)
	if cfg.support >= cfg.delta:
		return Recoverability(False, np.inf, 0.0, 0.0, False, None)

	floor = cfg.delta - cfg.support
	surface = exponent_surface(cfg, grid_size)
	peak = _peak(cfg, surface)
	tau = peak.t1p + peak.t2p
	outside = tau < floor
	best = _boundary_max(cfg, floor) if outside else peak

	verdict = outside and (margin == 0 or best.psi_total < -margin)
	log.debug(
		"%s: peak at face excess %.6g (floor %.6g), admissible max psi %.6g at (%.4g, %.4g)",
		cfg,
		tau,
		floor,
		best.psi_total,
		best.t1p,
		best.t2p,
	)
	return Recoverability(
		recoverable=bool(verdict),
		max_psi=best.psi_total,
		t1p=best.t1p,
		t2p=best.t2p,
		near_threshold=bool(abs(best.psi_total) < band),
		surface=surface,
		face_excess=tau,
	)


def threshold_P1(
	delta: float,
	P2: float,
	gamma1: float,
	gamma2: float,
	W: float = 1.0,
	*,
	tol: float | None = None,
	margin: float = 0.0,
	grid_size: int | None = None,
) -> float:
	"""Largest recoverable P1 by bisection on [0, 1]; 0 when P1 = 0 already fails."""
	tol = get_settings().threshold_tol if tol is None else tol
	base = AsymptoticConfig(delta=delta, gamma1=gamma1, gamma2=gamma2, P1=0.0, P2=P2, W=W)

	def works(P1: float) -> bool:
		return recoverable(base.replace(P1=P1), margin, grid_size).recoverable

	if not works(0.0):
		return 0.0
	if works(1.0):
		return 1.0

	lo, hi = 0.0, 1.0
	while hi - lo > tol:
		mid = 0.5 * (lo + hi)
		if works(mid):
			lo = mid
		else:
			hi = mid

	log.info("threshold delta=%g P2=%g W=%g: P1 = %.4f", delta, P2, W, lo)
	return lo


def classical_weak_threshold(delta: float, *, tol: float | None = None, grid_size: int | None = None) -> float:
	"""k/n weak threshold of plain l1 minimization (a single class)."""
	return threshold_P1(delta, 0.0, 1.0, 0.0, 1.0, tol=tol, grid_size=grid_size)


class OptimalWeight(NamedTuple):
	W_star: float
	P1_star: float


INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def optimal_weight(
	delta: float,
	P2: float,
	gamma1: float,
	gamma2: float,
	*,
	w_max: float | None = None,
	tol: float | None = None,
	threshold_tol: float | None = None,
	grid_size: int | None = None,
	history: list | None = None,
) -> OptimalWeight:
	"""
	Golden-section search of threshold_P1 over W in [1, w_max]. W = 1 is kept
	unless weighting raises the threshold by more than threshold_tol.
	"""
	settings = get_settings()
	w_max = settings.w_max if w_max is None else w_max
	tol = settings.weight_tol if tol is None else tol
	threshold_tol = settings.threshold_tol if threshold_tol is None else threshold_tol
	if not w_max > 1:
		throw(f"w_max must exceed 1, got {w_max!r}", ValidationError)

	cache: dict[float, float] = {}

	def T(W: float) -> float:
		if W not in cache:
			cache[W] = threshold_P1(delta, P2, gamma1, gamma2, W, tol=threshold_tol / 10, grid_size=grid_size)
			if history is not None:
				history.append((W, cache[W]))
		return cache[W]

	a, b = 1.0, float(w_max)
	c = b - INV_PHI * (b - a)
	d = a + INV_PHI * (b - a)
	while b - a > tol:
		if T(c) >= T(d):
			b, d = d, c
			c = b - INV_PHI * (b - a)
		else:
			a, c = c, d
			d = a + INV_PHI * (b - a)

	candidates = [1.0, a, b, float(w_max)]
	best = max(candidates, key=lambda W: (T(W), -W))
	if T(best) - T(1.0) <= threshold_tol:
		best = 1.0

	log.info("optimal weight delta=%g P2=%g: W* = %.4g, P1* = %.4f", delta, P2, best, T(best))
	return OptimalWeight(W_star=best, P1_star=T(best))
