# Copyright (c) 2025, Weighted L1 Recovery contributors
# See license.txt

import contextlib
import io
import json
import tempfile
from pathlib import Path

from numpy.testing import assert_allclose

from weighted_l1_recovery import hooks
from weighted_l1_recovery.api.cli import get_attr, main
from weighted_l1_recovery.api.commands import FLAGS, THRESHOLD_COLUMNS
from weighted_l1_recovery.api.invocation import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, parse_integers, parse_values
from weighted_l1_recovery.exceptions import ValidationError
from weighted_l1_recovery.sparse_recovery.angles.angles import ANGLE_COLUMNS
from weighted_l1_recovery.sparse_recovery.experiments.experiments import CURVE_COLUMNS, ExperimentPlan
from weighted_l1_recovery.sparse_recovery.exponents.exponents import SURFACE_COLUMNS, threshold_P1
from weighted_l1_recovery.sparse_recovery.model.model import SparsityModel, gaussian_instance
from weighted_l1_recovery.sparse_recovery.recovery.recovery import recover_l1
from weighted_l1_recovery.tests.utils import ToolkitTestCase
from weighted_l1_recovery.utils.tables import read_csv_table, read_xlsx_table, write_json

RECOVER = ["recover", "--n", "40", "--m", "20", "--n1", "20", "--p1", "0.1", "--p2", "0.05", "--seed", "7"]
THRESHOLD = [
	"threshold",
	"--delta", "0.5",
	"--p2", "0.05",
	"--gamma1", "0.5",
	"--w2-range", "1:2:1",
	"--grid-size", "30",
	"--tol", "0.01",
]  # fmt: skip
SIMULATE = [
	"simulate",
	"--n", "30",
	"--n1", "15",
	"--m", "15",
	"--p2", "0.05",
	"--p1-values", "0,0.2",
	"--w2-values", "1,2",
	"--trials", "2",
]  # fmt: skip


def run(*argv) -> tuple[int, str]:
	stderr = io.StringIO()
	with contextlib.redirect_stderr(stderr):
		code = main([str(a) for a in argv])
	return code, stderr.getvalue()


def read_manifest(out: Path) -> dict:
	return json.loads((out / "manifest.json").read_text())


class CliTestCase(ToolkitTestCase):
	def setUp(self):
		super().setUp()
		self._tmp = tempfile.TemporaryDirectory()
		self.tmp = Path(self._tmp.name)

	def tearDown(self):
		self._tmp.cleanup()
		super().tearDown()


class TestSweepParsing(ToolkitTestCase):
	def test_inclusive_range(self):
		values = parse_values("1:3:0.1")
		self.assertEqual(len(values), 21)
		self.assertEqual((values[0], values[10], values[-1]), (1.0, 2.0, 3.0))
		self.assertEqual(parse_values("1:1:1"), [1.0])
		self.assertEqual(parse_values("0:2"), [0.0, 1.0, 2.0])

	def test_lists(self):
		self.assertEqual(parse_values("1, 2.5"), [1.0, 2.5])
		self.assertEqual(parse_values([1, 2]), [1.0, 2.0])
		self.assertEqual(parse_values(""), [])
		self.assertEqual(parse_integers("0:3"), [0, 1, 2, 3])

	def test_malformed(self):
		for text in ("3:1", "1:2:0", "1:2:3:4", "a:b", "x"):
			with self.assertRaises(ValidationError):
				parse_values(text)
		with self.assertRaises(ValidationError):
			parse_integers("0.5,1")


class TestRegistry(ToolkitTestCase):
	def test_every_command_has_a_handler_and_flags(self):
		for command, path in hooks.commands.items():
			self.assertTrue(callable(get_attr(path)))
			self.assertIn(command, FLAGS)


class TestRecover(CliTestCase):
	def test_writes_outputs_and_manifest(self):
		out = self.tmp / "run"
		code, _ = run(*RECOVER, "--w2", "2", "--out", out)
		self.assertIn(code, (EXIT_OK, EXIT_NEGATIVE))
		for name in ("manifest.json", "x_true.csv", "x_hat.csv", "diagnostics.json"):
			self.assertTrue((out / name).exists(), name)

		manifest = read_manifest(out)
		self.assertEqual(manifest["schema_version"], 1)
		self.assertEqual(manifest["command"], "recover")
		self.assertEqual(manifest["seed"], 7)
		self.assertEqual(manifest["params"]["w2"], 2.0)
		self.assertEqual(manifest["params"]["amplitude"], "gaussian")

		diagnostics = json.loads((out / "diagnostics.json").read_text())
		self.assertEqual(diagnostics["success"], code == EXIT_OK)

	def test_rerun_from_manifest_is_identical(self):
		first, second = self.tmp / "a", self.tmp / "b"
		code_a, _ = run(*RECOVER, "--w2", "3", "--out", first)
		code_b, _ = run("recover", "--manifest", first / "manifest.json", "--out", second)
		self.assertEqual(code_a, code_b)
		for name in ("x_true.csv", "x_hat.csv"):
			self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

	def test_unit_weight_is_plain_l1(self):
		out = self.tmp / "plain"
		run(*RECOVER, "--w2", "1", "--out", out)
		model = SparsityModel(n=40, n1=20, n2=20, P1=0.1, P2=0.05)
		expected = recover_l1(gaussian_instance(model, 20, "gaussian", 7)).x_hat
		_, rows = read_csv_table(out / "x_hat.csv")
		assert_allclose([float(v) for _, v in rows], expected, rtol=0, atol=1e-12)

	def test_exit_codes_follow_the_verdict(self):
		code, _ = run(*RECOVER[:7], "--p1", "0", "--p2", "0", "--out", self.tmp / "zero")
		self.assertEqual(code, EXIT_OK)
		# dense signal, half as many measurements as unknowns
		code, _ = run(*RECOVER[:7], "--p1", "1", "--p2", "1", "--out", self.tmp / "dense")
		self.assertEqual(code, EXIT_NEGATIVE)

	def test_missing_flag(self):
		code, stderr = run("recover", "--n", "40", "--n1", "20", "--p1", "0.1", "--p2", "0.1", "--out", self.tmp)
		self.assertEqual(code, EXIT_ERROR)
		self.assertIn("--m", stderr)
		self.assertIn("usage:", stderr)
		self.assertFalse((self.tmp / "manifest.json").exists())

	def test_invalid_values(self):
		code, _ = run("recover", "--n", "40", "--m", "50", "--n1", "20", "--p1", "0.1", "--p2", "0.1", "--out", self.tmp)
		self.assertEqual(code, EXIT_ERROR)

	def test_manifest_of_another_command(self):
		run(*RECOVER, "--out", self.tmp / "a")
		code, stderr = run("threshold", "--manifest", self.tmp / "a" / "manifest.json", "--out", self.tmp / "b")
		self.assertEqual(code, EXIT_ERROR)
		self.assertIn("recover", stderr)


class TestThreshold(CliTestCase):
	def test_sweep_and_rerun(self):
		first, second = self.tmp / "a", self.tmp / "b"
		self.assertEqual(run(*THRESHOLD, "--threads", "1", "--plot", "--out", first)[0], EXIT_OK)
		header, rows = read_csv_table(first / "threshold.csv")
		self.assertEqual(header, THRESHOLD_COLUMNS)
		self.assertEqual([float(r[0]) for r in rows], [1.0, 2.0])
		self.assertEqual(float(rows[0][1]), threshold_P1(0.5, 0.05, 0.5, 0.5, 1.0, tol=0.01, grid_size=30))
		self.assertTrue((first / "threshold.svg").exists())

		code, _ = run("threshold", "--manifest", first / "manifest.json", "--threads", "2", "--out", second)
		self.assertEqual(code, EXIT_OK)
		self.assertEqual((first / "threshold.csv").read_bytes(), (second / "threshold.csv").read_bytes())
		self.assertTrue((second / "threshold.svg").exists())

	def test_json_format(self):
		out = self.tmp / "json"
		argv = [*THRESHOLD[:7], "--w2-range", "1:1:1", "--grid-size", "30", "--tol", "0.01"]
		self.assertEqual(run(*argv, "--format", "json", "--out", out)[0], EXIT_OK)
		records = json.loads((out / "threshold.json").read_text())
		self.assertEqual(len(records), 1)
		self.assertEqual(records[0]["W2"], 1.0)
		self.assertEqual(read_manifest(out)["params"]["format"], "json")

	def test_bad_range(self):
		code, _ = run(*THRESHOLD[:7], "--w2-range", "3:1", "--out", self.tmp)
		self.assertEqual(code, EXIT_ERROR)


class TestSimulate(CliTestCase):
	def test_inline_plan_and_rerun(self):
		first, second = self.tmp / "a", self.tmp / "b"
		self.assertEqual(run(*SIMULATE, "--threads", "1", "--plot", "--out", first)[0], EXIT_OK)
		header, rows = read_csv_table(first / "curve.csv")
		self.assertEqual(header, CURVE_COLUMNS)
		self.assertEqual([(float(r[0]), float(r[1])) for r in rows], [(0.0, 1.0), (0.0, 2.0), (0.2, 1.0), (0.2, 2.0)])
		self.assertTrue((first / "curve.svg").exists())
		self.assertEqual(read_manifest(first)["params"]["p1_values"], [0.0, 0.2])
		self.assertTrue(read_manifest(first)["params"]["plot"])
		failures = json.loads((first / "failures.json").read_text())
		self.assertEqual(failures["solver_failures"], 0)
		self.assertEqual(failures["points"], [])

		code, _ = run("simulate", "--manifest", first / "manifest.json", "--threads", "2", "--out", second)
		self.assertEqual(code, EXIT_OK)
		self.assertEqual((first / "curve.csv").read_bytes(), (second / "curve.csv").read_bytes())

	def test_plan_file(self):
		plan = ExperimentPlan(n=30, n1=15, n2=15, m=15, P2=0.05, P1_values=(0.1,), W2_values=(1.0,), trials=3, base_seed=11)
		path = write_json(self.tmp / "plan.json", plan.to_manifest())
		out = self.tmp / "out"
		self.assertEqual(run("simulate", "--plan", path, "--trials", "1", "--threads", "1", "--out", out)[0], EXIT_OK)

		manifest = read_manifest(out)
		self.assertEqual(manifest["seed"], 11)
		self.assertEqual(manifest["params"]["trials"], 1)
		self.assertNotIn("plan", manifest["params"])
		_, rows = read_csv_table(out / "curve.csv")
		self.assertEqual(len(rows), 1)

	def test_empty_sweep(self):
		code, _ = run(*SIMULATE[:9], "--p1-values", "", "--w2-values", "1", "--out", self.tmp)
		self.assertEqual(code, EXIT_ERROR)


class TestOtherCommands(CliTestCase):
	def test_weights(self):
		argv = ["weights", "--delta", "0.5", "--p2", "0.05", "--gamma1", "0.5", "--w-max", "2", "--tol", "0.5"]
		self.assertEqual(run(*argv, "--grid-size", "20", "--threads", "1", "--out", self.tmp)[0], EXIT_OK)
		result = json.loads((self.tmp / "weights.json").read_text())
		self.assertTrue(1.0 <= result["W_star"] <= 2.0)
		self.assertEqual(result["evaluations"], len(result["history"]))
		header, rows = read_csv_table(self.tmp / "search.csv")
		self.assertEqual(header, THRESHOLD_COLUMNS)
		self.assertEqual(len(rows), result["evaluations"])

	def test_surface(self):
		argv = ["surface", "--delta", "0.5", "--gamma1", "0.5", "--p1", "0.1", "--p2", "0.05", "--w2", "2"]
		self.assertEqual(run(*argv, "--grid-size", "10", "--out", self.tmp)[0], EXIT_OK)
		header, rows = read_csv_table(self.tmp / "surface.csv")
		self.assertEqual(header, SURFACE_COLUMNS)
		self.assertGreater(len(rows), 0)
		best = json.loads((self.tmp / "max_point.json").read_text())
		self.assertAlmostEqual(best["psi_total"], max(float(r[5]) for r in rows), places=8)
		self.assertIn("recoverable", best)

	def test_surface_in_json(self):
		argv = ["surface", "--delta", "0.5", "--gamma1", "0.5", "--p1", "0.1", "--p2", "0.05", "--w2", "2"]
		self.assertEqual(run(*argv, "--grid-size", "10", "--format", "json", "--out", self.tmp)[0], EXIT_OK)
		self.assertFalse((self.tmp / "surface.csv").exists())
		records = json.loads((self.tmp / "surface.json").read_text())
		self.assertEqual(list(records[0]), SURFACE_COLUMNS)
		self.assertEqual(read_manifest(self.tmp)["params"]["format"], "json")

	def test_search_in_xlsx(self):
		argv = ["weights", "--delta", "0.5", "--p2", "0.05", "--gamma1", "0.5", "--w-max", "2", "--tol", "0.5"]
		code, _ = run(*argv, "--grid-size", "20", "--format", "xlsx", "--out", self.tmp)
		self.assertEqual(code, EXIT_OK)
		header, rows = read_xlsx_table(self.tmp / "search.xlsx")
		self.assertEqual(header, THRESHOLD_COLUMNS)
		history = json.loads((self.tmp / "weights.json").read_text())["history"]
		self.assertEqual([list(r) for r in rows], [list(h) for h in history])

	def test_angles(self):
		argv = ["angles", "--n", "10", "--n1", "5", "--p1", "0.2", "--p2", "0.2", "--w2", "2"]
		code, _ = run(*argv, "--t1-range", "0:2", "--t2-range", "1", "--m", "7", "--out", self.tmp)
		self.assertEqual(code, EXIT_OK)
		header, rows = read_csv_table(self.tmp / "angles.csv")
		self.assertEqual(header, ANGLE_COLUMNS)
		self.assertEqual([(int(float(r[0])), int(float(r[1]))) for r in rows], [(0, 1), (1, 1), (2, 1)])
		self.assertIn("log_union_bound", json.loads((self.tmp / "union_bound.json").read_text()))
