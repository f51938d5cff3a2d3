# Copyright (c) 2025, Weighted L1 Recovery contributors
# For license information, please see license.txt

"""
Command handlers registered in hooks.commands. Each takes an Invocation,
records its effective parameters in the manifest, writes its tables and
returns an exit code.
"""

from __future__ import annotations

from joblib import Parallel, delayed

from weighted_l1_recovery.api.invocation import EXIT_NEGATIVE, EXIT_OK, Invocation, parse_integers, parse_values
from weighted_l1_recovery.config import get_settings
from weighted_l1_recovery.exceptions import SolverFailure, ToolkitError, throw
from weighted_l1_recovery.sparse_recovery.angles.angles import ANGLE_COLUMNS, angle_table, union_bound_sum
from weighted_l1_recovery.sparse_recovery.experiments.experiments import (
	CURVE_COLUMNS,
	ExperimentPlan,
	curve,
	failure_report,
	run_plan,
)
from weighted_l1_recovery.sparse_recovery.exponents.exponents import (
	SURFACE_COLUMNS,
	AsymptoticConfig,
	exponent_surface,
	optimal_weight,
	recoverable,
	threshold_P1,
)
from weighted_l1_recovery.sparse_recovery.lpsolve.lpsolve import LpStatus, SolverOptions
from weighted_l1_recovery.sparse_recovery.model.model import SparsityModel, WeightScheme, gaussian_instance
from weighted_l1_recovery.sparse_recovery.recovery.recovery import recover as recover_instance
from weighted_l1_recovery.utils.logger import logger
from weighted_l1_recovery.utils.svg import line_plot
from weighted_l1_recovery.utils.tables import write_json, write_vector

log = logger("cli")

THRESHOLD_COLUMNS = ["W2", "P1_threshold"]

# Command parameters as (name, type, help); the flag is --name with dashes.
FLAGS = {
	"recover": [
		("n", int, "signal length"),
		("m", int, "number of measurements"),
		("n1", int, "size of the first class; the second has n - n1 indices"),
		("p1", float, "nonzero probability in the first class"),
		("p2", float, "nonzero probability in the second class"),
		("w2", float, "weight of the second class (default 1, plain l1)"),
		("amplitude", str, "law of the nonzero entries: gaussian or rademacher"),
		("success_tol", float, "relative error below which the recovery counts as exact"),
	],
	"simulate": [
		("plan", str, "fixture name or JSON plan; flags override its fields"),
		("n", int, "signal length"),
		("n1", int, "size of the first class"),
		("m", int, "number of measurements"),
		("p2", float, "nonzero probability in the second class"),
		("p1_values", str, "P1 sweep: a,b,c or start:stop:step"),
		("w2_values", str, "W2 sweep: a,b,c or start:stop:step"),
		("trials", int, "instances per (P1, W2) point"),
		("amplitude", str, "law of the nonzero entries: gaussian or rademacher"),
		("success_tol", float, "relative error below which a recovery counts as exact"),
	],
	"threshold": [
		("delta", float, "m / n"),
		("p2", float, "nonzero probability in the second class"),
		("gamma1", float, "n1 / n"),
		("gamma2", float, "n2 / n (default 1 - gamma1)"),
		("w2_range", str, "W2 sweep: a,b,c or start:stop:step"),
		("grid_size", int, "points per axis of the exponent grid"),
		("tol", float, "bisection tolerance in P1"),
	],
	"weights": [
		("delta", float, "m / n"),
		("p2", float, "nonzero probability in the second class"),
		("gamma1", float, "n1 / n"),
		("gamma2", float, "n2 / n (default 1 - gamma1)"),
		("w_max", float, "upper end of the weight search"),
		("tol", float, "search tolerance in W"),
		("grid_size", int, "points per axis of the exponent grid"),
	],
	"surface": [
		("delta", float, "m / n"),
		("gamma1", float, "n1 / n"),
		("gamma2", float, "n2 / n (default 1 - gamma1)"),
		("p1", float, "nonzero probability in the first class"),
		("p2", float, "nonzero probability in the second class"),
		("w2", float, "weight of the second class"),
		("grid_size", int, "points per axis of the exponent grid"),
	],
	"angles": [
		("n", int, "signal length"),
		("n1", int, "size of the first class"),
		("p1", float, "nonzero probability in the first class"),
		("p2", float, "nonzero probability in the second class"),
		("w2", float, "weight of the second class"),
		("k", int, "support size (default round(n1 p1 + n2 p2))"),
		("t1_range", str, "extra class-1 vertices: a,b,c or start:stop:step"),
		("t2_range", str, "extra class-2 vertices: a,b,c or start:stop:step"),
		("m", int, "measurements; adds the log union bound over all admissible terms"),
	],
}

# simulate flag -> ExperimentPlan field
PLAN_FIELDS = {
	"n": "n",
	"n1": "n1",
	"m": "m",
	"p2": "P2",
	"p1_values": "P1_values",
	"w2_values": "W2_values",
	"trials": "trials",
	"amplitude": "amplitude",
	"success_tol": "success_tol",
}


def _gamma2(inv: Invocation) -> float:
	return float(inv.setdefault("gamma2", 1.0 - float(inv.get("gamma1"))))


def recover(inv: Invocation) -> int:
	"""One instance, one weighted l1 recovery; exit 1 when the recovery is not exact."""
	inv.require("n", "m", "n1", "p1", "p2")
	n, n1 = int(inv.get("n")), int(inv.get("n1"))
	model = SparsityModel(n=n, n1=n1, n2=n - n1, P1=float(inv.get("p1")), P2=float(inv.get("p2")))
	W2 = float(inv.setdefault("w2", 1.0))
	amplitude = inv.setdefault("amplitude", get_settings().amplitude)
	seed = inv.use_seed(0)
	inv.write_manifest()

	instance = gaussian_instance(model, int(inv.get("m")), amplitude, seed)
	result = recover_instance(
		instance, WeightScheme.two_valued(model, W2), SolverOptions.from_settings(), inv.get("success_tol")
	)

	write_vector(inv.out / "x_true", instance.x_true.x, "x_true")
	write_vector(inv.out / "x_hat", result.x_hat, "x_hat")
	write_json(
		inv.out / "diagnostics.json",
		{
			"success": result.success,
			"status": result.status.value,
			"objective": result.objective,
			"max_abs_error": result.max_abs_error,
			"degenerate": result.degenerate,
			"iterations": result.iterations,
			"support_size": int(instance.x_true.support.size),
			"instance_key": instance.key,
		},
	)

	if result.status is not LpStatus.OPTIMAL:
		throw(f"Recovery LP ended with status {result.status.value}", SolverFailure, seed=seed)

	log.info("recovery %s (max error %.3g)", "succeeded" if result.success else "failed", result.max_abs_error)
	return EXIT_OK if result.success else EXIT_NEGATIVE


def _plan(inv: Invocation) -> ExperimentPlan:
	if inv.get("plan"):
		base = ExperimentPlan.load(inv.params.pop("plan"))
		for name, attr in PLAN_FIELDS.items():
			value = getattr(base, attr)
			inv.setdefault(name, list(value) if isinstance(value, tuple) else value)
		inv.use_seed(base.base_seed)
	inv.params.pop("plan", None)

	inv.require("n", "n1", "m", "p2", "p1_values", "w2_values")
	inv.setdefault("trials", get_settings().trials)
	inv.setdefault("amplitude", get_settings().amplitude)
	inv.params["p1_values"] = parse_values(inv.get("p1_values"))
	inv.params["w2_values"] = parse_values(inv.get("w2_values"))

	fields = {attr: inv.params.get(name) for name, attr in PLAN_FIELDS.items()}
	fields["n2"] = int(fields["n"]) - int(fields["n1"])
	return ExperimentPlan(base_seed=inv.use_seed(0), **fields)


def simulate(inv: Invocation) -> int:
	"""Recovery curves of an experiment plan: one row per (P1, W2)."""
	plan = _plan(inv)
	inv.write_manifest()

	points = run_plan(plan, threads=inv.threads)
	inv.table("curve", CURVE_COLUMNS, [p.to_row() for p in points])
	write_json(inv.out / "failures.json", failure_report(points))

	if inv.plot:
		series = {f"W2={W2:g}": curve(points, W2) for W2 in plan.W2_values}
		line_plot(
			series,
			inv.out / "curve.svg",
			title=f"Recovery rate, n={plan.n}, m={plan.m}, P2={plan.P2:g}",
			xlabel="P1",
			ylabel="recovery rate",
			ylim=(0.0, 1.0),
		)
	return EXIT_OK


def _threshold_at(W2: float, delta: float, P2: float, gamma1: float, gamma2: float, tol, grid_size) -> float:
	try:
		return threshold_P1(delta, P2, gamma1, gamma2, W2, tol=tol, grid_size=grid_size)
	except ToolkitError as e:
		throw(f"Threshold computation failed at W2={W2:g}: {e}", type(e), **{**e.diagnostics, "W2": W2})


def threshold(inv: Invocation) -> int:
	"""Recoverable P1 threshold for every W2 of the sweep."""
	inv.require("delta", "p2", "gamma1", "w2_range")
	delta, P2, gamma1 = float(inv.get("delta")), float(inv.get("p2")), float(inv.get("gamma1"))
	gamma2 = _gamma2(inv)
	settings = get_settings()
	grid_size = int(inv.setdefault("grid_size", settings.grid_size))
	tol = float(inv.setdefault("tol", settings.threshold_tol))
	W2_values = parse_values(inv.get("w2_range"))
	if not W2_values:
		throw("The W2 sweep is empty")
	inv.write_manifest()

	thresholds = Parallel(n_jobs=inv.n_jobs)(
		delayed(_threshold_at)(W2, delta, P2, gamma1, gamma2, tol, grid_size) for W2 in W2_values
	)
	inv.table("threshold", THRESHOLD_COLUMNS, list(zip(W2_values, thresholds)))

	if inv.plot:
		line_plot(
			{"P1 threshold": (W2_values, thresholds)},
			inv.out / "threshold.svg",
			title=f"Recoverable P1, delta={delta:g}, P2={P2:g}, gamma1={gamma1:g}",
			xlabel="W2",
			ylabel="P1 threshold",
		)
	return EXIT_OK


def weights(inv: Invocation) -> int:
	"""Optimal second-class weight and the threshold it reaches."""
	inv.require("delta", "p2", "gamma1")
	gamma2 = _gamma2(inv)
	settings = get_settings()
	w_max = float(inv.setdefault("w_max", settings.w_max))
	tol = float(inv.setdefault("tol", settings.weight_tol))
	grid_size = int(inv.setdefault("grid_size", settings.grid_size))
	inv.write_manifest()

	history: list[tuple[float, float]] = []
	result = optimal_weight(
		float(inv.get("delta")),
		float(inv.get("p2")),
		float(inv.get("gamma1")),
		gamma2,
		w_max=w_max,
		tol=tol,
		grid_size=grid_size,
		history=history,
	)
	history.sort()
	write_json(
		inv.out / "weights.json",
		{"W_star": result.W_star, "P1_star": result.P1_star, "evaluations": len(history), "history": history},
	)
	inv.table("search", THRESHOLD_COLUMNS, history)
	return EXIT_OK


def surface(inv: Invocation) -> int:
	"""psi_com, psi_int, psi_ext and their combination over the admissible (t1', t2') grid."""
	inv.require("delta", "gamma1", "p1", "p2")
	cfg = AsymptoticConfig(
		delta=float(inv.get("delta")),
		gamma1=float(inv.get("gamma1")),
		gamma2=_gamma2(inv),
		P1=float(inv.get("p1")),
		P2=float(inv.get("p2")),
		W=float(inv.setdefault("w2", 1.0)),
	)
	grid_size = int(inv.setdefault("grid_size", get_settings().grid_size))
	inv.write_manifest()

	verdict = recoverable(cfg, grid_size=grid_size)
	result = verdict.surface or exponent_surface(cfg, grid_size)
	inv.table("surface", SURFACE_COLUMNS, result.to_rows())
	if result.admissible.any():
		best = result.max_point()
		write_json(
			inv.out / "max_point.json",
			{
				"t1p": best.t1p,
				"t2p": best.t2p,
				"psi_total": best.psi_total,
				"recoverable": verdict.recoverable,
				"face_excess": verdict.face_excess,
			},
		)
	return EXIT_OK


def angles(inv: Invocation) -> int:
	"""Finite-n internal and external angles and union-bound terms over a (t1, t2) grid."""
	inv.require("n", "n1", "p1", "p2", "t1_range", "t2_range")
	n, n1 = int(inv.get("n")), int(inv.get("n1"))
	model = SparsityModel(n=n, n1=n1, n2=n - n1, P1=float(inv.get("p1")), P2=float(inv.get("p2")))
	W2 = float(inv.setdefault("w2", 1.0))
	k = inv.get("k")
	pairs = [(t1, t2) for t1 in parse_integers(inv.get("t1_range")) for t2 in parse_integers(inv.get("t2_range"))]
	inv.write_manifest()

	rtol = get_settings().quad_rtol
	inv.table("angles", ANGLE_COLUMNS, angle_table(model, W2, pairs, k, rtol))
	if inv.get("m") is not None:
		m = int(inv.get("m"))
		write_json(inv.out / "union_bound.json", {"m": m, "log_union_bound": union_bound_sum(model, W2, m, k, rtol)})
	return EXIT_OK
