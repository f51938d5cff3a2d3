# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
One command-line run: the effective parameters (flags over an optional
manifest), the seed and the output directory. Every run leaves exactly one
manifest.json in its output directory; feeding it back through --manifest
reproduces the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from weighted_l1_recovery import __version__
from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import ValidationError, throw
from weighted_l1_recovery.utils.rng import RNG_SCHEME
from weighted_l1_recovery.utils.tables import TABLE_FORMATS, read_json, write_json, write_table

MANIFEST_SCHEMA_VERSION = 1
MANIFEST_FILE = "manifest.json"
DEFAULT_OUT = "weighted_l1_out"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

# Sweeps longer than this are almost certainly a typo in the step.
MAX_SWEEP = 10_000

# Common options recorded in the manifest next to the command flags.
OUTPUT_OPTIONS = ("format", "plot")


def _flag(name: str) -> str:
	return "--" + name.replace("_", "-")


def parse_values(value: Any) -> list[float]:
	"""
	A sweep given as a list, a comma list ("1,2,3") or an inclusive range
	"start:stop[:step]" (step 1 when omitted), so 1:3:0.1 has 21 values.
	"""
	if value is None:
		return []
	if isinstance(value, (list, tuple)):
		return [float(v) for v in value]
	if isinstance(value, (int, float)):
		return [float(value)]

	text = str(value).strip()
	if not text:
		return []
	try:
		if ":" not in text:
			return [float(v) for v in text.split(",") if v.strip()]
		parts = [float(v) for v in text.split(":")]
	except ValueError:
		throw(f"Cannot read {text!r} as a list or a start:stop:step range", ValidationError)

	if len(parts) not in (2, 3):
		throw(f"Ranges are start:stop or start:stop:step, got {text!r}", ValidationError)
	start, stop = parts[0], parts[1]
	step = parts[2] if len(parts) == 3 else 1.0
	if step <= 0 or stop < start:
		throw(f"Range {text!r} needs stop >= start and a positive step", ValidationError)

	count = int(np.floor((stop - start) / step + 1e-9)) + 1
	if count > MAX_SWEEP:
		throw(f"Range {text!r} has {count} values, more than {MAX_SWEEP}", ValidationError)
	return [float(v) for v in np.round(start + step * np.arange(count), 12)]


def parse_integers(value: Any) -> list[int]:
	values = parse_values(value)
	if any(v != round(v) for v in values):
		throw(f"Expected whole numbers, got {values}", ValidationError)
	return [int(round(v)) for v in values]


@dataclass
class Invocation:
	command: str
	params: dict[str, Any] = field(default_factory=dict)
	seed: int | None = None
	out: Path = Path(DEFAULT_OUT)
	threads: int | None = None

	@classmethod
	def from_args(cls, args) -> Invocation:
		"""Flags given on the command line win over the manifest they re-run."""
		params: dict[str, Any] = {}
		seed = None
		if args.manifest:
			doc = load_manifest(args.manifest, args.command)
			params.update(doc.get("params") or {})
			seed = doc.get("seed")

		for name in (*args.param_names, *OUTPUT_OPTIONS):
			value = getattr(args, name, None)
			if value is not None:
				params[name] = value
		if args.seed is not None:
			seed = args.seed

		return cls(
			command=args.command,
			params=params,
			seed=None if seed is None else int(seed),
			out=Path(args.out or DEFAULT_OUT),
			threads=args.threads,
		)

	def require(self, *names: str) -> None:
		missing = [_flag(name) for name in names if self.params.get(name) is None]
		if missing:
			throw(f"Missing required parameters: {', '.join(missing)}", ValidationError, command=self.command)

	def get(self, name: str, default: Any = None) -> Any:
		value = self.params.get(name)
		return default if value is None else value

	def setdefault(self, name: str, default: Any) -> Any:
		"""Value of `name`, recording `default` as the effective value when absent."""
		if self.params.get(name) is None:
			self.params[name] = default
		return self.params[name]

	def use_seed(self, default: int = 0) -> int:
		if self.seed is None:
			self.seed = default
		return self.seed

	@property
	def fmt(self) -> str:
		fmt = self.setdefault("format", "csv")
		if fmt not in TABLE_FORMATS:
			throw(f"Unknown format {fmt!r}; expected one of {', '.join(TABLE_FORMATS)}", ValidationError)
		return fmt

	@property
	def plot(self) -> bool:
		return bool(self.setdefault("plot", False))

	@property
	def n_jobs(self) -> int:
		threads = get_settings().threads if self.threads is None else int(self.threads)
		return -1 if threads <= 0 else threads

	def manifest(self) -> dict:
		return {
			"schema_version": MANIFEST_SCHEMA_VERSION,
			"command": self.command,
			"code_version": __version__,
			"rng_scheme": RNG_SCHEME,
			"seed": self.seed,
			"params": dict(self.params),
		}

	def write_manifest(self) -> Path:
		self.setdefault("format", self.fmt)
		self.setdefault("plot", self.plot)
		return write_json(self.out / MANIFEST_FILE, self.manifest())

	def table(self, name: str, header, rows) -> Path:
		return write_table(self.out / name, header, rows, self.fmt)


def load_manifest(path: str | Path, command: str) -> dict:
	doc = read_json(path)
	if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
		throw(f"Unsupported manifest schema version {doc.get('schema_version')!r}", ValidationError)
	if doc.get("command") != command:
		throw(f"Manifest {path} was written by {doc.get('command')!r}, not {command!r}", ValidationError)
	if doc.get("rng_scheme", RNG_SCHEME) != RNG_SCHEME:
		throw(f"Manifest uses RNG scheme {doc['rng_scheme']!r}, this build has {RNG_SCHEME!r}", ValidationError)
	return doc
