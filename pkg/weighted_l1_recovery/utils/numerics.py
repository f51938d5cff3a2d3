"""
Special functions and root/quadrature helpers shared by the angle and
exponent computations. Everything here works on numpy arrays so the
exponent grids can be solved in one pass.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable

import numpy as np
from scipy import integrate, special

from weighted_l1_recovery.exceptions import QuadratureFailure, RootBracketFailure, throw

SQRT2 = np.sqrt(2.0)
SQRT_PI = np.sqrt(np.pi)
TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
LOG2 = np.log(2.0)

# Integrand mass below exp(-LOG_CUTOFF) of the peak is dropped.
LOG_CUTOFF = 60.0


def log_erf(x):
	"""log(erf(x)) for x >= 0, accurate both near 0 and in the tail."""
	x = np.asarray(x, dtype=float)
	with np.errstate(divide="ignore"):
		return np.where(x < 1.0, np.log(special.erf(x)), np.log1p(-special.erfc(x)))


def erf_ratio(x):
	"""
	q(x) = G'(x) / (x G(x)) with G = erf, and its derivative.

	G'(x) = 2/sqrt(pi) exp(-x^2) is the derivative of G; the external
	exponent stationarity condition is written in terms of q.
	"""
	x = np.asarray(x, dtype=float)
	g = TWO_OVER_SQRT_PI * np.exp(-x * x)
	G = special.erf(x)
	xG = x * G
	q = g / xG
	dq = -g * (2.0 * x * x * G + G + x * g) / (xG * xG)
	return q, dq


def external_stationarity(x, C, D1, D2, W):
	"""
	h(x) = 2C - D1 q(x) - W^2 D2 q(Wx), increasing in x, and h'(x).

	Its root x0 is the Laplace point of
	int exp(-C x^2) G(x)^D1 G(Wx)^D2 dx.
	"""
	q1, dq1 = erf_ratio(x)
	q2, dq2 = erf_ratio(W * x)
	h = 2.0 * C - D1 * q1 - W * W * D2 * q2
	dh = -D1 * dq1 - W**3 * D2 * dq2
	return h, dh


def inverse_mills(x):
	"""m(x) = phi(x) / Phi(-x) and m'(x) = m (m - x)."""
	x = np.asarray(x, dtype=float)
	m = SQRT_2_OVER_PI / special.erfcx(x / SQRT2)
	return m, m * (m - x)


def half_normal_cgf(s):
	"""Cumulant generating function of |N(0,1)|: s^2/2 + log(2 Phi(s))."""
	s = np.asarray(s, dtype=float)
	neg = np.minimum(s, 0.0)
	pos = np.maximum(s, 0.0)
	return np.where(s <= 0.0, np.log(special.erfcx(-neg / SQRT2)), pos * pos / 2.0 + LOG2 + special.log_ndtr(pos))


def internal_stationarity(sigma, omega, t1, t2, W):
	"""
	H(sigma) = (omega + t1 + W^2 t2) sigma - t1 m(sigma) - t2 W m(W sigma)
	and H'. The root is the saddle point of
	omega s^2/2 + t1 L(-s) + t2 L(-W s), L the half-normal CGF.
	"""
	m1, dm1 = inverse_mills(sigma)
	m2, dm2 = inverse_mills(W * sigma)
	a = omega + t1 + W * W * t2
	H = a * sigma - t1 * m1 - t2 * W * m2
	dH = a - t1 * dm1 - t2 * W * W * dm2
	return H, dH


def bracket_increasing(fun: Callable, lo, hi, *, shrink: float = 0.1, grow: float = 2.0, max_steps: int = 80):
	"""
	Widen [lo, hi] elementwise until fun(lo) < 0 < fun(hi) for an increasing
	fun returning (value, derivative). lo shrinks towards zero, hi grows.
	"""
	lo = np.array(lo, dtype=float, copy=True)
	hi = np.array(hi, dtype=float, copy=True)

	for _ in range(max_steps):
		f_lo = fun(lo)[0]
		f_hi = fun(hi)[0]
		bad_lo = ~(f_lo < 0)
		bad_hi = ~(f_hi > 0)
		if not (bad_lo.any() or bad_hi.any()):
			return lo, hi
		lo = np.where(bad_lo, lo * shrink, lo)
		hi = np.where(bad_hi, hi * grow, hi)

	throw(
		"No sign change found while bracketing the stationarity equation",
		RootBracketFailure,
		lo=np.atleast_1d(lo)[np.atleast_1d(bad_lo)].tolist(),
		hi=np.atleast_1d(hi)[np.atleast_1d(bad_hi)].tolist(),
	)


def solve_increasing(fun: Callable, lo, hi, *, max_iter: int = 200, xtol: float = 4 * np.finfo(float).eps):
	"""
	Elementwise root of an increasing function on a sign-changing bracket.

	Newton steps from the current iterate are taken when they stay inside
	the bracket, bisection otherwise; the bracket shrinks every iteration.
	"""
	lo = np.array(lo, dtype=float, copy=True)
	hi = np.array(hi, dtype=float, copy=True)
	x = 0.5 * (lo + hi)

	for _ in range(max_iter):
		f, df = fun(x)
		neg = f < 0
		lo = np.where(neg, x, lo)
		hi = np.where(neg, hi, x)

		with np.errstate(divide="ignore", invalid="ignore"):
			newton = x - f / df
		inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
		x_new = np.where(inside, newton, 0.5 * (lo + hi))
		x_new = np.where(f == 0, x, x_new)

		done = np.abs(x_new - x) <= xtol * np.maximum(np.abs(x), 1e-300)
		x = x_new
		if np.all(done | (hi - lo <= xtol * np.abs(hi))):
			break

	return x


def log_binomial(N, t):
	"""log C(N, t) through log-gamma; N may be non-integer."""
	N = np.asarray(N, dtype=float)
	t = np.asarray(t, dtype=float)
	return special.gammaln(N + 1.0) - special.gammaln(t + 1.0) - special.gammaln(N - t + 1.0)


def binary_entropy(p):
	"""Natural-log binary entropy; zero at p = 0 and p = 1."""
	p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
	return special.entr(p) + special.entr(1.0 - p)


def _quad(fun: Callable, a: float, b: float, rtol: float, points=None) -> tuple[float, float]:
	with warnings.catch_warnings():
		warnings.simplefilter("ignore", integrate.IntegrationWarning)
		val, err = integrate.quad(fun, a, b, epsabs=0.0, epsrel=rtol, limit=400, points=points)
	return val, err


def integrate_peak(log_fun: Callable, peak: float, scale: float, *, lower: float = 0.0, rtol: float = 1e-8) -> float:
	"""
	log of int_lower^inf exp(log_fun(x)) dx for a unimodal integrand with
	its maximum at `peak`. The integration window is widened from `scale`
	until the integrand has dropped by LOG_CUTOFF on both sides, and the
	integrand is evaluated as exp(log_fun - log_fun(peak)).
	"""
	f0 = float(log_fun(peak))

	def edge(direction: int) -> float:
		step = scale
		for _ in range(200):
			cand = peak + direction * step
			if direction < 0 and cand <= lower:
				return lower
			if log_fun(cand) - f0 < -LOG_CUTOFF:
				return cand
			step *= 2.0
		throw("Integrand does not decay", QuadratureFailure, peak=peak, scale=scale)

	a = edge(-1) if peak > lower else lower
	b = edge(+1)

	def integrand(x: float) -> float:
		return float(np.exp(log_fun(x) - f0))

	total = err = 0.0
	for lo, hi in ((a, peak), (peak, b)):
		if hi > lo:
			val, e = _quad(integrand, lo, hi, rtol)
			total += val
			err += e

	if not total > 0 or err > rtol * total:
		throw(
			f"Quadrature did not reach relative tolerance {rtol:g}",
			QuadratureFailure,
			value=total,
			error=err,
			peak=peak,
		)
	return f0 + float(np.log(total))


def integrate_real_part(fun: Callable, upper: float, *, rtol: float = 1e-8, points=None) -> float:
	"""int_0^upper fun(u) du for a real (possibly oscillating) integrand; returns the value."""
	val, err = _quad(fun, 0.0, upper, rtol, points=points)
	if not val > 0 or err > rtol * abs(val):
		throw(
			f"Quadrature did not reach relative tolerance {rtol:g}",
			QuadratureFailure,
			value=val,
			error=err,
		)
	return val
