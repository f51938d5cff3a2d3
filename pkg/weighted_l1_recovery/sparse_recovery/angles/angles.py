# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
Finite-n internal and external angles of the weighted cross-polytope and the
union-bound terms built from them.

A term is indexed by (t1, t2): the face G extends the support face F by t1
extra class-1 and t2 extra class-2 vertices, so l = k + t1 + t2. With
xi^2 = sum_{i in G} w_i^2 and r_i the class-i indices left outside G,

	gamma = xi / sqrt(pi) int_0^inf exp(-xi^2 x^2) erf(x)^r1 erf(W x)^r2 dx

	beta  = sqrt(2/pi) 2^-(l-k) xi J,  J = int_0^inf Re exp(F(-sigma + iu)) du

where F(z) = Omega z^2/2 + t1 L(z) + t2 L(W z), L the half-normal cumulant
generating function and Omega = sum_{i in F} w_i^2. The contour of J sits on
the real saddle point -sigma of F. Everything is returned as a natural log.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import DomainError, ValidationError, throw
from weighted_l1_recovery.sparse_recovery.model.model import SparsityModel
from weighted_l1_recovery.utils.logger import logger
from weighted_l1_recovery.utils.numerics import (
	LOG2,
	LOG_CUTOFF,
	SQRT2,
	bracket_increasing,
	external_stationarity,
	half_normal_cgf,
	integrate_peak,
	integrate_real_part,
	internal_stationarity,
	log_binomial,
	log_erf,
	solve_increasing,
)
from weighted_l1_recovery.utils.rng import SAMPLING, generator

log = logger("angles")

LOG_PI = np.log(np.pi)
# Slack allowed on the class ranges when n_i P_i is not an integer.
RANGE_SLACK = 1e-9
ANGLE_COLUMNS = ["t1", "t2", "l", "log_beta", "log_gamma", "log_term"]


@dataclass(frozen=True)
class AngleQuery:
	model: SparsityModel
	W2: float
	k: int
	t1: int
	t2: int

	def __post_init__(self):
		if not self.W2 > 0:
			throw(f"W2 must be positive, got {self.W2!r}", ValidationError)
		if self.t1 < 0 or self.t2 < 0:
			throw(f"t1, t2 must be non-negative, got ({self.t1}, {self.t2})", ValidationError)
		if self.t1 > self.room1 + RANGE_SLACK or self.t2 > self.room2 + RANGE_SLACK:
			throw(
				f"(t1, t2) = ({self.t1}, {self.t2}) exceeds the class ranges "
				f"({self.room1:g}, {self.room2:g})",
				ValidationError,
			)
		if self.l > self.model.n:
			throw(f"l = k + t1 + t2 = {self.l} exceeds n = {self.model.n}", ValidationError)

	@classmethod
	def for_model(cls, model: SparsityModel, W2: float, t1: int, t2: int, k: int | None = None) -> AngleQuery:
		"""Query with the typical support size k = round(n1 P1 + n2 P2) unless given."""
		if k is None:
			k = int(round(sum(model.expected_support())))
		return cls(model=model, W2=float(W2), k=int(k), t1=int(t1), t2=int(t2))

	@property
	def room1(self) -> float:
		return (1.0 - self.model.P1) * self.model.n1

	@property
	def room2(self) -> float:
		return (1.0 - self.model.P2) * self.model.n2

	@property
	def l(self) -> int:  # noqa: E743
		return self.k + self.t1 + self.t2

	@property
	def r1(self) -> float:
		return max(self.room1 - self.t1, 0.0)

	@property
	def r2(self) -> float:
		return max(self.room2 - self.t2, 0.0)

	@property
	def omega(self) -> float:
		"""Weight energy of the support face F."""
		k1, k2 = self.model.expected_support()
		return k1 + self.W2**2 * k2

	@property
	def xi2(self) -> float:
		"""Weight energy of the face G."""
		return self.omega + self.t1 + self.W2**2 * self.t2


def _rtol(rtol: float | None) -> float:
	return get_settings().quad_rtol if rtol is None else rtol


def external_angle(q: AngleQuery, rtol: float | None = None, scale: float = 1.0) -> float:
	"""
	log gamma(t1, t2). `scale` substitutes x -> x / scale in the integral and
	leaves the value unchanged up to quadrature error.
	"""
	rtol = _rtol(rtol)
	r1, r2, W = q.r1, q.r2, q.W2
	if r1 == 0 and r2 == 0:
		# G is a facet
		return -LOG2
	C = q.xi2
	if not C > 0:
		throw("External angle needs a face with positive weight energy", DomainError, query=repr(q))

	def fun(x):
		return external_stationarity(x, C, r1, r2, W)

	lo, hi = bracket_increasing(fun, 1e-3 / np.sqrt(C), 1.0)
	x0 = float(solve_increasing(fun, lo, hi))

	def log_integrand(u: float) -> float:
		x = u / scale
		value = -C * x * x
		if r1:
			value += r1 * log_erf(x)
		if r2:
			value += r2 * log_erf(W * x)
		return float(value)

	width = scale / np.sqrt(2.0 * C)
	log_integral = integrate_peak(log_integrand, scale * x0, width, rtol=rtol)
	return float(0.5 * np.log(C) - 0.5 * LOG_PI - np.log(scale) + log_integral)


def _saddle(q: AngleQuery) -> tuple[float, float]:
	"""Real saddle point sigma of the shifted contour and the curvature there."""
	omega, t1, t2, W = q.omega, float(q.t1), float(q.t2), q.W2

	def fun(sigma):
		return internal_stationarity(sigma, omega, t1, t2, W)

	lo, hi = bracket_increasing(fun, 0.0, np.sqrt((t1 + W * W * t2) / omega) + 1.0)
	sigma = float(solve_increasing(fun, lo, hi))
	curvature = float(fun(sigma)[1])
	return sigma, curvature


def _log_mgf(z, omega: float, t1: float, t2: float, W: float):
	"""F(z) for complex z; log erfcx(zeta) = log wofz(i zeta)."""
	value = 0.5 * omega * z * z
	if t1:
		value = value + t1 * np.log(special.wofz(-1j * z / SQRT2))
	if t2:
		value = value + t2 * np.log(special.wofz(-1j * W * z / SQRT2))
	return value


def internal_angle(q: AngleQuery, rtol: float | None = None, scale: float = 1.0) -> float:
	"""log beta(t1, t2); zero when G = F."""
	rtol = _rtol(rtol)
	tau = q.t1 + q.t2
	if tau == 0:
		return 0.0
	omega = q.omega
	if not omega > 0:
		throw("Internal angle needs a support face with positive weight energy", DomainError, query=repr(q))

	t1, t2, W = float(q.t1), float(q.t2), q.W2
	sigma, curvature = _saddle(q)
	L0 = 0.5 * omega * sigma**2 + t1 * float(half_normal_cgf(-sigma)) + t2 * float(half_normal_cgf(-W * sigma))

	def integrand(v: float) -> float:
		z = complex(-sigma, v / scale)
		return float(np.exp(_log_mgf(z, omega, t1, t2, W) - L0).real)

	# |exp(F - L0)| <= exp(-omega u^2 / 2), so this cut drops under exp(-LOG_CUTOFF)
	upper = scale * np.sqrt(2.0 * LOG_CUTOFF / omega)
	width = scale / np.sqrt(curvature)
	points = [width * 2.0**j for j in range(12) if width * 2.0**j < upper] or None

	value = integrate_real_part(integrand, upper, rtol=rtol, points=points) / scale
	return float(0.5 * LOG2 - 0.5 * LOG_PI - tau * LOG2 + 0.5 * np.log(q.xi2) + L0 + np.log(value))


def log_combinatorial(q: AngleQuery) -> float:
	"""log of 2^(t1+t2) C((1-P1) n1, t1) C((1-P2) n2, t2)."""
	return float((q.t1 + q.t2) * LOG2 + log_binomial(q.room1, q.t1) + log_binomial(q.room2, q.t2))


def union_bound_term(q: AngleQuery, rtol: float | None = None) -> float:
	"""log of one term of the failure-probability union bound."""
	return log_combinatorial(q) + internal_angle(q, rtol) + external_angle(q, rtol)


def union_bound_sum(model: SparsityModel, W2: float, m: int, k: int | None = None, rtol: float | None = None) -> float:
	"""
	log of the sum of union_bound_term over every admissible (t1, t2) with
	t1 + t2 > m - k + 1; -inf when no term qualifies.
	"""
	if k is None:
		k = int(round(sum(model.expected_support())))
	top1 = int(np.floor((1.0 - model.P1) * model.n1 + RANGE_SLACK))
	top2 = int(np.floor((1.0 - model.P2) * model.n2 + RANGE_SLACK))

	terms = [
		union_bound_term(AngleQuery(model, float(W2), int(k), t1, t2), rtol)
		for t1 in range(top1 + 1)
		for t2 in range(top2 + 1)
		if t1 + t2 > m - k + 1 and k + t1 + t2 <= model.n
	]
	if not terms:
		return -np.inf
	total = float(special.logsumexp(terms))
	log.debug("union bound n=%d m=%d k=%d: %d terms, log sum %.6g", model.n, m, k, len(terms), total)
	return total


def angle_table(model: SparsityModel, W2: float, pairs, k: int | None = None, rtol: float | None = None) -> list[list]:
	"""Rows [t1, t2, l, log_beta, log_gamma, log_term] for each (t1, t2) pair."""
	rows = []
	for t1, t2 in pairs:
		q = AngleQuery.for_model(model, W2, t1, t2, k)
		log_beta = internal_angle(q, rtol)
		log_gamma = external_angle(q, rtol)
		rows.append([q.t1, q.t2, q.l, log_beta, log_gamma, log_combinatorial(q) + log_beta + log_gamma])
	return rows


def _whole(value: float, name: str) -> int:
	if abs(value - round(value)) > 1e-9:
		throw(f"Monte Carlo estimates need an integer {name}, got {value!r}", ValidationError)
	return int(round(value))


def external_angle_monte_carlo(q: AngleQuery, samples: int = 100_000, seed: int = 0) -> float:
	"""
	Fraction of Gaussian points of R^(n-l+1) inside the normal cone at G:
	a >= 0 along the face normal and |v_i| <= (a / xi) w_i off G.
	"""
	r1, r2 = _whole(q.r1, "r1"), _whole(q.r2, "r2")
	w = np.concatenate([np.ones(r1), np.full(r2, q.W2)])
	rng = generator(seed, SAMPLING)
	a = rng.standard_normal(samples)
	v = rng.standard_normal((samples, w.size))
	inside = (a >= 0) & np.all(np.abs(v) <= np.outer(a / np.sqrt(q.xi2), w), axis=1)
	return float(inside.mean())


def internal_angle_monte_carlo(q: AngleQuery, samples: int = 100_000, seed: int = 0) -> float:
	"""
	Fraction of Gaussian points of the (l-k)-dimensional span of the cone at F
	that fall inside it. The cone is generated by b >= 0 through
	b -> (-(w'b / Omega) w_F, b), whose Gram matrix is I + w w' / Omega.
	"""
	w = np.concatenate([np.ones(q.t1), np.full(q.t2, q.W2)])
	if w.size == 0:
		return 1.0
	R = np.linalg.cholesky(np.eye(w.size) + np.outer(w, w) / q.omega).T
	z = generator(seed, SAMPLING).standard_normal((w.size, samples))
	b = np.linalg.solve(R, z)
	return float(np.all(b >= 0, axis=0).mean())
