from __future__ import annotations

import hashlib

import numpy as np


def _digest(*arrays: np.ndarray) -> str:
	h = hashlib.sha256()
	for a in arrays:
		a = np.ascontiguousarray(a, dtype=np.float64)
		h.update(str(a.shape).encode())
		h.update(a.tobytes())
	return h.hexdigest()[:16]


def make_instance_key(seed, A, x, y) -> str:
	"""Build a deterministic key for a problem instance."""
	m, n = np.shape(A)
	support = int(np.count_nonzero(x))

	return f"{int(seed)}::{m}x{n}::k={support}::{_digest(A, x, y)}"


def ensure_same_instance(keys: list[str], label: str = "") -> str:
	"""
	Check that every key in `keys` is identical (paired comparison across
	weights). Returns the shared key; raises a readable error otherwise.
	"""
	from weighted_l1_recovery.exceptions import ValidationError, throw

	distinct = sorted(set(keys))
	if len(distinct) != 1:
		throw(
			f"Unpaired instances{' for ' + label if label else ''}: {len(distinct)} distinct keys",
			ValidationError,
			keys=distinct,
		)
	return distinct[0]
