# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
Monte Carlo recovery curves: for each P1 of a sweep and each W2 of a weight
sweep, `trials` Gaussian instances are recovered by weighted l1
minimization. The instance of a (P1, trial) pair does not depend on W2, so
every weight is judged on the same signals.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize, stats

from weighted_l1_recovery import hooks
from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import ValidationError, throw
from weighted_l1_recovery.sparse_recovery.exponents.exponents import AsymptoticConfig, threshold_P1
from weighted_l1_recovery.sparse_recovery.lpsolve.lpsolve import LpStatus, SolverOptions
from weighted_l1_recovery.sparse_recovery.model.model import AmplitudeLaw, SparsityModel, WeightScheme, gaussian_instance
from weighted_l1_recovery.sparse_recovery.recovery.recovery import recover
from weighted_l1_recovery.utils.instance_key import ensure_same_instance
from weighted_l1_recovery.utils.logger import log_error, logger
from weighted_l1_recovery.utils.rng import RNG_SCHEME, derive_seed
from weighted_l1_recovery.utils.tables import read_json

log = logger("experiments")

PLAN_SCHEMA_VERSION = 1
CURVE_COLUMNS = ["P1", "W2", "trials", "successes", "rate", "ci_lo", "ci_hi"]
CROSSING_LEVEL = 0.5
CONFIDENCE = 0.95


def _strictly_increasing(values, name: str) -> tuple[float, ...]:
	values = tuple(float(v) for v in values)
	if not values:
		throw(f"{name} must not be empty", ValidationError)
	if any(b <= a for a, b in zip(values, values[1:])):
		throw(f"{name} must be strictly increasing, got {list(values)}", ValidationError)
	return values


@dataclass(frozen=True)
class ExperimentPlan:
	n: int
	n1: int
	n2: int
	m: int
	P2: float
	P1_values: tuple[float, ...]
	W2_values: tuple[float, ...]
	trials: int = 200
	base_seed: int = 0
	amplitude: str = "gaussian"
	success_tol: float | None = None

	def __post_init__(self):
		object.__setattr__(self, "P1_values", _strictly_increasing(self.P1_values, "P1_values"))
		object.__setattr__(self, "W2_values", _strictly_increasing(self.W2_values, "W2_values"))
		object.__setattr__(self, "amplitude", AmplitudeLaw.parse(self.amplitude).value)
		if int(self.trials) != self.trials or self.trials < 1:
			throw(f"trials must be a positive integer, got {self.trials!r}", ValidationError)
		if not 0 < self.m < self.n:
			throw(f"m must satisfy 0 < m < n, got m={self.m}, n={self.n}", ValidationError)
		if any(w <= 0 for w in self.W2_values):
			throw("W2 values must be positive", ValidationError)
		# validates n, n1, n2 and every P1
		for P1 in self.P1_values:
			self.model(P1)

	def model(self, P1: float) -> SparsityModel:
		return SparsityModel(n=self.n, n1=self.n1, n2=self.n2, P1=P1, P2=self.P2)

	@property
	def delta(self) -> float:
		return self.m / self.n

	@property
	def gamma1(self) -> float:
		return self.n1 / self.n

	def replace(self, **changes) -> ExperimentPlan:
		return dataclasses.replace(self, **changes)

	def to_manifest(self) -> dict:
		plan = dataclasses.asdict(self)
		plan["P1_values"] = list(self.P1_values)
		plan["W2_values"] = list(self.W2_values)
		if plan["success_tol"] is None:
			del plan["success_tol"]
		return {"schema_version": PLAN_SCHEMA_VERSION, "command": "simulate", "rng_scheme": RNG_SCHEME, "plan": plan}

	@classmethod
	def from_manifest(cls, doc: dict) -> ExperimentPlan:
		"""Plan from a manifest ({"plan": {...}}) or from the bare plan object."""
		if doc.get("schema_version", PLAN_SCHEMA_VERSION) != PLAN_SCHEMA_VERSION:
			throw(f"Unsupported plan schema version {doc.get('schema_version')!r}", ValidationError)
		if doc.get("rng_scheme", RNG_SCHEME) != RNG_SCHEME:
			throw(f"Plan uses RNG scheme {doc['rng_scheme']!r}, this build has {RNG_SCHEME!r}", ValidationError)

		plan = doc.get("plan", doc)
		fields = {f.name for f in dataclasses.fields(cls)}
		unknown = sorted(set(plan) - fields)
		if unknown:
			throw(f"Unknown plan fields: {', '.join(unknown)}", ValidationError)
		try:
			return cls(**plan)
		except TypeError as e:
			throw(f"Incomplete plan: {e}", ValidationError)

	@classmethod
	def load(cls, name_or_path: str | Path) -> ExperimentPlan:
		"""Plan from a fixture name registered in hooks.fixtures or from a JSON file."""
		if name_or_path in hooks.fixtures:
			name_or_path = Path(hooks.__file__).parent / hooks.fixtures[name_or_path]
		return cls.from_manifest(read_json(name_or_path))


@dataclass(eq=False)
class TrialCube:
	"""Trial outcomes indexed [P1 index, W2 index, trial]."""

	plan: ExperimentPlan
	success: np.ndarray = field(repr=False)
	solver_failure: np.ndarray = field(repr=False)
	keys: list[list[str]] = field(repr=False)

	@property
	def successes(self) -> np.ndarray:
		return self.success.sum(axis=2)


@dataclass
class CurvePoint:
	P1: float
	W2: float
	trials: int
	successes: int
	recovery_rate: float
	wilson_interval: tuple[float, float]
	solver_failures: int = 0

	def to_row(self) -> list:
		return [self.P1, self.W2, self.trials, self.successes, self.recovery_rate, *self.wilson_interval]


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
	z = float(stats.norm.ppf(0.5 + confidence / 2))
	p = successes / trials
	denom = 1.0 + z * z / trials
	centre = (p + z * z / (2 * trials)) / denom
	half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
	return max(0.0, centre - half), min(1.0, centre + half)


def _run_trial(plan: ExperimentPlan, i_p1: int, i_w2: int, trial: int, opts: SolverOptions):
	"""(success, solver_failure, instance key) for one grid cell and trial."""
	seed = derive_seed(plan.base_seed, i_p1, trial)
	try:
		model = plan.model(plan.P1_values[i_p1])
		instance = gaussian_instance(model, plan.m, plan.amplitude, seed)
		result = recover(instance, WeightScheme.two_valued(model, plan.W2_values[i_w2]), opts, plan.success_tol)
	except Exception:
		log_error(f"Trial failed: P1={plan.P1_values[i_p1]} W2={plan.W2_values[i_w2]} trial={trial} seed={seed}")
		return False, True, ""
	return result.success, result.status is not LpStatus.OPTIMAL, instance.key


def _n_jobs(threads: int | None) -> int:
	threads = get_settings().threads if threads is None else int(threads)
	return -1 if threads <= 0 else threads


def run_trials(plan: ExperimentPlan, threads: int | None = None, opts: SolverOptions | None = None) -> TrialCube:
	"""
	Every (P1, W2, trial) task, in any order and on any number of workers;
	outcomes land at their own index so the cube does not depend on
	scheduling.
	"""
	opts = opts or SolverOptions.from_settings()
	shape = (len(plan.P1_values), len(plan.W2_values), plan.trials)
	tasks = list(np.ndindex(*shape))
	log.info("running %d recoveries (%d x %d grid, %d trials)", len(tasks), shape[0], shape[1], shape[2])

	outcomes = Parallel(n_jobs=_n_jobs(threads))(delayed(_run_trial)(plan, i, j, t, opts) for i, j, t in tasks)

	success = np.zeros(shape, dtype=bool)
	failure = np.zeros(shape, dtype=bool)
	cell_keys = np.empty(shape, dtype=object)
	for (i, j, t), (ok, failed, key) in zip(tasks, outcomes):
		success[i, j, t] = ok
		failure[i, j, t] = failed
		cell_keys[i, j, t] = key

	keys = []
	for i, P1 in enumerate(plan.P1_values):
		row = []
		for t in range(plan.trials):
			found = [k for k in cell_keys[i, :, t] if k]
			row.append(ensure_same_instance(found, f"P1={P1} trial={t}") if found else "")
		keys.append(row)

	failures = int(failure.sum())
	if failures:
		log.warning("%d of %d recoveries ended without an optimal LP; counted as failures", failures, len(tasks))
	return TrialCube(plan=plan, success=success, solver_failure=failure, keys=keys)


def curve_points(cube: TrialCube) -> list[CurvePoint]:
	plan = cube.plan
	points = []
	for i, P1 in enumerate(plan.P1_values):
		for j, W2 in enumerate(plan.W2_values):
			successes = int(cube.success[i, j].sum())
			points.append(
				CurvePoint(
					P1=P1,
					W2=W2,
					trials=plan.trials,
					successes=successes,
					recovery_rate=successes / plan.trials,
					wilson_interval=wilson_interval(successes, plan.trials),
					solver_failures=int(cube.solver_failure[i, j].sum()),
				)
			)
	return points


def run_plan(plan: ExperimentPlan, threads: int | None = None, opts: SolverOptions | None = None) -> list[CurvePoint]:
	"""Recovery rate with its Wilson interval for every (P1, W2) of the plan."""
	return curve_points(run_trials(plan, threads, opts))


def failure_report(points: list[CurvePoint]) -> dict:
	"""Solver failures per (P1, W2), kept apart from the recovery rates."""
	return {
		"solver_failures": sum(p.solver_failures for p in points),
		"points": [{"P1": p.P1, "W2": p.W2, "solver_failures": p.solver_failures} for p in points if p.solver_failures],
	}


def curve(points: list[CurvePoint], W2: float) -> tuple[np.ndarray, np.ndarray]:
	"""(P1 values, rates) of one weight."""
	selected = sorted((p for p in points if p.W2 == W2), key=lambda p: p.P1)
	return np.array([p.P1 for p in selected]), np.array([p.recovery_rate for p in selected])


def best_weight_envelope(points: list[CurvePoint]) -> list[tuple[float, float, float]]:
	"""(P1, best W2, best rate) per P1; ties go to the smaller weight."""
	by_p1: dict[float, CurvePoint] = {}
	for p in sorted(points, key=lambda p: (p.P1, p.W2)):
		if p.P1 not in by_p1 or p.recovery_rate > by_p1[p.P1].recovery_rate:
			by_p1[p.P1] = p
	return [(P1, p.W2, p.recovery_rate) for P1, p in sorted(by_p1.items())]


@dataclass
class PairedComparison:
	P1: float
	W2_a: float
	W2_b: float
	only_a: int
	only_b: int
	p_value: float


def paired_comparison(cube: TrialCube, i_p1: int, W2_a: float, W2_b: float) -> PairedComparison:
	"""Exact McNemar test on the trials where exactly one of the two weights succeeds."""
	W2_values = list(cube.plan.W2_values)
	if W2_a not in W2_values or W2_b not in W2_values:
		throw(f"W2 values {W2_a}, {W2_b} are not part of the plan", ValidationError)
	a = cube.success[i_p1, W2_values.index(W2_a)]
	b = cube.success[i_p1, W2_values.index(W2_b)]
	only_a = int(np.sum(a & ~b))
	only_b = int(np.sum(b & ~a))
	discordant = only_a + only_b
	p_value = 1.0 if discordant == 0 else float(stats.binomtest(only_b, discordant, 0.5).pvalue)
	return PairedComparison(cube.plan.P1_values[i_p1], W2_a, W2_b, only_a, only_b, p_value)


def crossing_p1(P1_values, rates, level: float = CROSSING_LEVEL) -> float | None:
	"""
	First P1 where the rate falls through `level`, by linear interpolation
	between neighbouring grid points. None when the curve never crosses or
	has fewer than two points.
	"""
	P1_values = np.asarray(P1_values, dtype=float)
	rates = np.asarray(rates, dtype=float)
	if len(P1_values) < 2:
		return None
	for i in range(len(rates) - 1):
		r0, r1 = rates[i], rates[i + 1]
		if r0 >= level > r1:
			return float(P1_values[i] + (r0 - level) / (r0 - r1) * (P1_values[i + 1] - P1_values[i]))
	return None


def monotonicity_residual(rates) -> float:
	"""Largest distance between the rates and their non-increasing isotonic fit."""
	rates = np.asarray(rates, dtype=float)
	fit = optimize.isotonic_regression(rates, increasing=False).x
	return float(np.max(np.abs(rates - fit), initial=0.0))


@dataclass
class TheoryGap:
	W2: float
	empirical_crossing: float | None
	threshold: float
	gap: float | None


@dataclass
class TheoryReport:
	gaps: list[TheoryGap]
	ordering_agrees: bool
	insufficient_sweep: bool


def plan_config(plan: ExperimentPlan, W: float = 1.0) -> AsymptoticConfig:
	"""Asymptotic configuration with the plan's (delta, gamma1, gamma2, P2); P1 is left at 0."""
	return AsymptoticConfig(delta=plan.delta, gamma1=plan.gamma1, gamma2=1.0 - plan.gamma1, P1=0.0, P2=plan.P2, W=W)


def _same_order(a: list[float], b: list[float]) -> bool:
	for i in range(len(a)):
		for j in range(i + 1, len(a)):
			if np.sign(a[i] - a[j]) != np.sign(b[i] - b[j]):
				return False
	return True


def empirical_vs_theory(
	plan: ExperimentPlan,
	cfg: AsymptoticConfig | None = None,
	points: list[CurvePoint] | None = None,
	*,
	threads: int | None = None,
	grid_size: int | None = None,
) -> TheoryReport:
	"""
	Empirical 50% crossing in P1 per W2 next to threshold_P1 for the same
	(delta, P2, gamma1, gamma2). Runs the plan unless `points` are given.
	"""
	cfg = cfg or plan_config(plan)
	expected = plan_config(plan)
	if not np.allclose([cfg.delta, cfg.gamma1, cfg.P2], [expected.delta, expected.gamma1, expected.P2]):
		throw("Configuration does not describe the plan's delta, gamma1 and P2", ValidationError)
	if points is None:
		points = run_plan(plan, threads)

	insufficient = len(plan.P1_values) < 2
	if insufficient:
		log.warning("P1 sweep has a single point; no crossing can be located")

	gaps = []
	for W2 in plan.W2_values:
		crossing = crossing_p1(*curve(points, W2))
		threshold = threshold_P1(cfg.delta, cfg.P2, cfg.gamma1, cfg.gamma2, W2, grid_size=grid_size)
		gaps.append(TheoryGap(W2, crossing, threshold, None if crossing is None else crossing - threshold))

	located = [g for g in gaps if g.empirical_crossing is not None]
	ordering = _same_order([g.empirical_crossing for g in located], [g.threshold for g in located])
	return TheoryReport(gaps=gaps, ordering_agrees=ordering, insufficient_sweep=insufficient)
