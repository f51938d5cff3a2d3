from __future__ import annotations

import numpy as np

# Bump when stream layout or generator changes; recorded in every manifest.
RNG_SCHEME = "philox-seedsequence-v1"

# Stream ids, first element of the SeedSequence spawn key.
MATRIX = 0
SIGNAL = 1
SUPPORT = 2
SAMPLING = 3


def generator(seed: int, stream: int, *counters: int) -> np.random.Generator:
	"""
	Counter-based Philox generator for (seed, stream, *counters).

	Streams with different keys are independent, so the matrix and the
	signal of one instance never share random numbers, and per-trial
	streams in an experiment depend only on their own indices.
	"""
	seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream), *map(int, counters)))
	return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, *counters: int) -> int:
	"""64-bit child seed for the counters; stable across platforms and runs."""
	seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(map(int, counters)))
	return int(seq.generate_state(1, dtype=np.uint64)[0])
