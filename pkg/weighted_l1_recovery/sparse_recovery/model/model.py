# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
Non-uniformly sparse signal ensemble: two index classes K1, K2 with their
own sparsity factors, two-valued weights, and the Gaussian measurement
ensemble. Every draw is a pure function of (model, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import DimensionMismatch, ValidationError, throw
from weighted_l1_recovery.utils.instance_key import make_instance_key
from weighted_l1_recovery.utils.rng import MATRIX, RNG_SCHEME, SIGNAL, SUPPORT, generator


class AmplitudeLaw(str, Enum):
	GAUSSIAN = "gaussian"
	RADEMACHER = "rademacher"

	@classmethod
	def parse(cls, value: AmplitudeLaw | str | None) -> AmplitudeLaw:
		if value is None:
			value = get_settings().amplitude
		try:
			return cls(value)
		except ValueError:
			throw(f"Unknown amplitude law {value!r}; expected gaussian or rademacher", ValidationError)


@dataclass(frozen=True)
class SparsityModel:
	n: int
	n1: int
	n2: int
	P1: float
	P2: float
	# Optional index order; K1 = permutation[:n1]. Contiguous blocks when None.
	permutation: tuple[int, ...] | None = None

	def __post_init__(self):
		for name in ("n", "n1", "n2"):
			value = getattr(self, name)
			if int(value) != value or value < 1:
				throw(f"{name} must be a positive integer, got {value!r}", ValidationError)
		if self.n1 + self.n2 != self.n:
			throw(f"n1 + n2 must equal n ({self.n1} + {self.n2} != {self.n})", ValidationError)
		for name in ("P1", "P2"):
			value = getattr(self, name)
			if not 0.0 <= value <= 1.0:
				throw(f"{name} must lie in [0, 1], got {value!r}", ValidationError)
		if self.permutation is not None and sorted(self.permutation) != list(range(self.n)):
			throw("permutation must be a permutation of 0..n-1", ValidationError)

	@classmethod
	def from_fractions(cls, n: int, gamma1: float, P1: float, P2: float) -> SparsityModel:
		"""Model with n1 = round(gamma1 n)."""
		if not 0.0 < gamma1 < 1.0:
			throw(f"gamma1 must lie in (0, 1), got {gamma1!r}", ValidationError)
		n1 = int(round(gamma1 * n))
		return cls(n=n, n1=n1, n2=n - n1, P1=P1, P2=P2)

	@cached_property
	def order(self) -> np.ndarray:
		if self.permutation is None:
			return np.arange(self.n)
		return np.asarray(self.permutation, dtype=int)

	@cached_property
	def K1(self) -> np.ndarray:
		return np.sort(self.order[: self.n1])

	@cached_property
	def K2(self) -> np.ndarray:
		return np.sort(self.order[self.n1 :])

	@cached_property
	def class_of(self) -> np.ndarray:
		"""Class label (1 or 2) of every index."""
		labels = np.full(self.n, 2, dtype=int)
		labels[self.K1] = 1
		return labels

	@property
	def probabilities(self) -> np.ndarray:
		return np.where(self.class_of == 1, self.P1, self.P2)

	def expected_support(self) -> tuple[float, float]:
		return self.n1 * self.P1, self.n2 * self.P2


@dataclass(frozen=True, eq=False)
class WeightScheme:
	W2: float
	weights: np.ndarray = field(repr=False)
	W1: float = 1.0

	def __post_init__(self):
		if self.W1 != 1.0:
			throw("W1 is normalized to 1", ValidationError)
		if not self.W2 > 0:
			throw(f"W2 must be positive, got {self.W2!r}", ValidationError)

	@classmethod
	def two_valued(cls, model: SparsityModel, W2: float) -> WeightScheme:
		W2 = float(W2)
		if not W2 > 0:
			throw(f"W2 must be positive, got {W2!r}", ValidationError)
		weights = np.where(model.class_of == 1, 1.0, W2)
		return cls(W2=W2, weights=weights)

	@classmethod
	def uniform(cls, n: int) -> WeightScheme:
		return cls(W2=1.0, weights=np.ones(int(n)))

	@property
	def n(self) -> int:
		return len(self.weights)


def as_weights(w: WeightScheme | np.ndarray | list, n: int | None = None) -> np.ndarray:
	"""Weight vector from a scheme or array; checks positivity and length."""
	weights = np.asarray(w.weights if isinstance(w, WeightScheme) else w, dtype=float)
	if weights.ndim != 1:
		throw("weights must be a vector", DimensionMismatch)
	if n is not None and len(weights) != n:
		throw(f"weights have length {len(weights)}, expected {n}", DimensionMismatch)
	if not np.all(weights > 0):
		throw("weights must be strictly positive", ValidationError)
	return weights


@dataclass(frozen=True, eq=False)
class SparseSignal:
	x: np.ndarray
	support: np.ndarray
	signs: np.ndarray

	@classmethod
	def from_vector(cls, x) -> SparseSignal:
		x = np.asarray(x, dtype=float)
		support = np.flatnonzero(x)
		return cls(x=x, support=support, signs=np.sign(x[support]).astype(int))

	@property
	def n(self) -> int:
		return len(self.x)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
	A: np.ndarray = field(repr=False)
	x_true: SparseSignal = field(repr=False)
	y: np.ndarray = field(repr=False)
	seed: int = 0

	def __post_init__(self):
		m, n = np.shape(self.A)
		if self.x_true.n != n or len(self.y) != m:
			throw(f"A is {m}x{n} but x has length {self.x_true.n} and y length {len(self.y)}", DimensionMismatch)
		if m >= n:
			throw(f"Instances need m < n, got m={m}, n={n}", ValidationError)

	@property
	def m(self) -> int:
		return self.A.shape[0]

	@property
	def n(self) -> int:
		return self.A.shape[1]

	@property
	def delta(self) -> float:
		return self.m / self.n

	@cached_property
	def key(self) -> str:
		return make_instance_key(self.seed, self.A, self.x_true.x, self.y)


def _amplitudes(rng: np.random.Generator, n: int, amplitude: AmplitudeLaw) -> np.ndarray:
	if amplitude is AmplitudeLaw.RADEMACHER:
		return rng.choice(np.array([-1.0, 1.0]), size=n)
	return rng.standard_normal(n)


def generate_signal(model: SparsityModel, amplitude: AmplitudeLaw | str | None = None, seed: int = 0) -> SparseSignal:
	"""
	Each index of K1 is nonzero with probability P1, of K2 with probability
	P2. All n uniforms and amplitudes are drawn regardless of the outcome so
	the stream layout does not depend on the support.
	"""
	amplitude = AmplitudeLaw.parse(amplitude)
	rng = generator(seed, SIGNAL)
	u = rng.random(model.n)
	amp = _amplitudes(rng, model.n, amplitude)

	x = np.where(u < model.probabilities, amp, 0.0)
	return SparseSignal.from_vector(x)


def gaussian_instance(
	model: SparsityModel, m: int, amplitude: AmplitudeLaw | str | None = None, seed: int = 0
) -> ProblemInstance:
	"""A with iid N(0, 1) entries, x from generate_signal, y = A x."""
	if not 0 < m < model.n:
		throw(f"m must satisfy 0 < m < n, got m={m}, n={model.n}", ValidationError)

	A = generator(seed, MATRIX).standard_normal((int(m), model.n))
	signal = generate_signal(model, amplitude, seed)
	return ProblemInstance(A=A, x_true=signal, y=A @ signal.x, seed=int(seed))


def is_typical(support, model: SparsityModel, eps: float | None = None) -> bool:
	"""Both class hit counts lie within eps n of n1 P1 and n2 P2."""
	eps = get_settings().typical_eps if eps is None else eps
	if not eps > 0:
		throw(f"eps must be positive, got {eps!r}", ValidationError)

	support = np.asarray(support, dtype=int)
	labels = model.class_of[support]
	k1 = int(np.count_nonzero(labels == 1))
	k2 = len(support) - k1
	mean1, mean2 = model.expected_support()
	bound = eps * model.n
	return abs(k1 - mean1) <= bound and abs(k2 - mean2) <= bound


def random_support_with_size(model: SparsityModel, k1: int, k2: int, seed: int = 0) -> np.ndarray:
	"""Uniformly random support with exactly k1 indices in K1 and k2 in K2."""
	if not (0 <= k1 <= model.n1 and 0 <= k2 <= model.n2):
		throw(f"Support sizes ({k1}, {k2}) do not fit classes of size ({model.n1}, {model.n2})", ValidationError)

	rng = generator(seed, SUPPORT)
	part1 = rng.choice(model.K1, size=k1, replace=False)
	part2 = rng.choice(model.K2, size=k2, replace=False)
	return np.sort(np.concatenate([part1, part2]).astype(int))


def weighted_norm(x, w: WeightScheme | np.ndarray | list) -> float:
	"""sum_i w_i |x_i|"""
	x = np.asarray(x, dtype=float)
	weights = np.asarray(w.weights if isinstance(w, WeightScheme) else w, dtype=float)
	if x.shape != weights.shape:
		throw(f"x has shape {x.shape}, weights have shape {weights.shape}", DimensionMismatch)
	return float(np.sum(weights * np.abs(x)))


def to_manifest(model: SparsityModel, W2: float, seed: int, amplitude: AmplitudeLaw | str | None = None) -> dict:
	return {
		"n": model.n,
		"n1": model.n1,
		"n2": model.n2,
		"P1": model.P1,
		"P2": model.P2,
		"W2": float(W2),
		"seed": int(seed),
		"amplitude": AmplitudeLaw.parse(amplitude).value,
		"rng_scheme": RNG_SCHEME,
	}


def from_manifest(doc: dict) -> tuple[SparsityModel, float, int, AmplitudeLaw]:
	"""Inverse of to_manifest: (model, W2, seed, amplitude)."""
	missing = [k for k in ("n", "n1", "n2", "P1", "P2", "W2", "seed") if k not in doc]
	if missing:
		throw(f"Manifest is missing {', '.join(missing)}", ValidationError)
	if doc.get("rng_scheme", RNG_SCHEME) != RNG_SCHEME:
		throw(f"Manifest uses RNG scheme {doc['rng_scheme']!r}, this build has {RNG_SCHEME!r}", ValidationError)

	model = SparsityModel(n=int(doc["n"]), n1=int(doc["n1"]), n2=int(doc["n2"]), P1=float(doc["P1"]), P2=float(doc["P2"]))
	return model, float(doc["W2"]), int(doc["seed"]), AmplitudeLaw.parse(doc.get("amplitude"))
