import csv
import io
import json
import tempfile
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import DatabaseError
from django.test import SimpleTestCase, TestCase

from apps.experiments.models import ConfigValidationError, ExperimentRun
from apps.experiments.runner import execute, parse_config, validate
from apps.measure.models import RadialSet

HALF_BLOCKS = {"intervals": [[0.0, 0.5]], "period": 1.0, "t_max": 20.0}
DAMPED_WAVE = {"d": 3, "s": 2.0, "c0": 1.0, "modes": 16, "t_final": 20.0, "output_dt": 0.5}


class RunExperimentTests(TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.root = Path(tmp.name)

    def write_config(self, payload, name="config.json"):
        path = self.root / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def run_command(self, payload, *args, out="out"):
        stdout = io.StringIO()
        call_command("runexperiment", str(self.write_config(payload)), "--out", str(self.root / out), *args, stdout=stdout, stderr=io.StringIO())
        return stdout.getvalue()

    def test_kernel_check_writes_result_files(self):
        output = self.run_command({"command": "kernel-check", "params": {"m_max": 2, "s_max": 20.0, "points": 30}, "seed": 7})
        self.assertIn("kernel-check", output)
        out = self.root / "out"
        summary = json.loads((out / "summary.json").read_text())
        self.assertTrue(summary["passed"])
        self.assertEqual(sorted(summary["scaled_residuals"]), ["0", "1", "2"])
        self.assertEqual(sorted(summary["scaled_identity_errors"]), ["0.5", "1.5"])
        self.assertIn("envelope", summary["error_measure"])
        self.assertNotIn("residuals", summary)
        rows = list(csv.reader(io.StringIO((out / "residuals.csv").read_text())))
        self.assertEqual(rows[0], ["m", "scaled_residual"])
        self.assertEqual(len(rows), 4)
        manifest = json.loads((out / "manifest.json").read_text())
        self.assertEqual(manifest["seed"], 7)
        self.assertEqual(manifest["command"], "kernel-check")
        self.assertEqual(manifest["files"], ["manifest.json", "residuals.csv", "summary.json"])
        self.assertEqual(len(manifest["config_sha256"]), 64)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.SUCCEEDED)
        self.assertEqual(run.exit_code, 0)
        self.assertEqual(run.config_hash, manifest["config_sha256"])

    def test_density_of_half_blocks(self):
        self.run_command({"command": "density", "params": {"alpha": 0.5, "E": HALF_BLOCKS}})
        summary = json.loads((self.root / "out" / "summary.json").read_text())
        self.assertAlmostEqual(summary["report"]["gamma_lebesgue"], 0.5, places=6)
        self.assertGreater(summary["report"]["gamma_mu"], 0.0)

    def test_damped_wave_outputs_are_deterministic(self):
        payload = {"command": "damped-wave", "params": DAMPED_WAVE, "seed": 11}
        self.run_command(payload, out="first")
        self.run_command(payload, out="second")
        first, second = self.root / "first", self.root / "second"
        self.assertEqual((first / "trace.csv").read_bytes(), (second / "trace.csv").read_bytes())
        hashes = [json.loads((path / "manifest.json").read_text())["config_sha256"] for path in (first, second)]
        self.assertEqual(hashes[0], hashes[1])
        self.run_command(payload, "--seed", "12", out="third")
        self.assertNotEqual(json.loads((self.root / "third" / "manifest.json").read_text())["config_sha256"], hashes[0])
        self.assertEqual(ExperimentRun.objects.filter(status=ExperimentRun.Status.SUCCEEDED).count(), 3)

    def test_validate_only_runs_nothing(self):
        output = self.run_command({"command": "damped-wave", "params": DAMPED_WAVE}, "--validate-only")
        self.assertIn("valid", output)
        self.assertFalse((self.root / "out").exists())
        self.assertFalse(ExperimentRun.objects.exists())

    def test_invalid_order_exits_with_two(self):
        with self.assertRaises(CommandError) as caught:
            self.run_command({"command": "density", "params": {"alpha": -0.6, "E": HALF_BLOCKS}})
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn("alpha > -1/2", str(caught.exception))

    def test_unknown_fields_exit_with_two(self):
        with self.assertRaises(CommandError) as caught:
            self.run_command({"command": "density", "params": {"alpha": 0.5, "E": HALF_BLOCKS, "beta": 1}})
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn("beta", str(caught.exception))
        with self.assertRaises(CommandError) as caught:
            self.run_command({"command": "density", "params": {"alpha": 0.5, "E": HALF_BLOCKS}, "mode": "fast"})
        self.assertEqual(caught.exception.returncode, 2)

    def test_missing_config_exits_with_four(self):
        with self.assertRaises(CommandError) as caught:
            call_command("runexperiment", str(self.root / "missing.json"), stdout=io.StringIO())
        self.assertEqual(caught.exception.returncode, 4)

    def test_non_convergence_exits_with_three_and_diagnostic(self):
        payload = {"command": "bernstein", "params": {"alpha": 0.5, "R_list": [1.0], "t_max": 1.0, "profiles": 1}}
        with self.assertRaises(CommandError) as caught:
            self.run_command(payload)
        self.assertEqual(caught.exception.returncode, 3)
        diagnostic = json.loads((self.root / "out" / "diagnostic.json").read_text())
        self.assertEqual(diagnostic["error"], "QuadratureConvergenceError")
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.NOT_CONVERGED)
        self.assertEqual(run.exit_code, 3)

    def test_largest_seed_round_trips(self):
        seed = 2**64 - 1
        self.run_command({"command": "density", "params": {"alpha": 0.5, "E": HALF_BLOCKS}}, "--seed", str(seed))
        manifest = json.loads((self.root / "out" / "manifest.json").read_text())
        self.assertEqual(manifest["seed"], seed)
        self.assertEqual(manifest["config"]["seed"], seed)
        run = ExperimentRun.objects.get()
        self.assertEqual(int(run.seed), seed)
        self.assertEqual(run.status, ExperimentRun.Status.SUCCEEDED)
        self.assertEqual(run.exit_code, 0)

    def test_unrecordable_run_exits_with_four(self):
        payload = {"command": "density", "params": {"alpha": 0.5, "E": HALF_BLOCKS}}
        with mock.patch.object(ExperimentRun.objects, "create", side_effect=DatabaseError("database is locked")):
            with self.assertRaises(CommandError) as caught:
                self.run_command(payload)
        self.assertEqual(caught.exception.returncode, 4)
        self.assertIn("database is locked", str(caught.exception))
        self.assertFalse((self.root / "out").exists())


class ConfigTests(SimpleTestCase):
    def test_seed_precedence(self):
        payload = {"command": "density", "params": {}, "seed": 5}
        self.assertEqual(parse_config(payload).seed, 5)
        self.assertEqual(parse_config(payload, seed=9).seed, 9)
        with self.assertRaises(ConfigValidationError):
            parse_config({"command": "density", "seed": -1})
        self.assertEqual(parse_config(payload, seed=2**64 - 1).seed, 2**64 - 1)
        for seed in (2**64, True, 1.5):
            with self.subTest(seed=seed):
                with self.assertRaises(ConfigValidationError):
                    parse_config(payload, seed=seed)
        with self.assertRaises(ConfigValidationError):
            parse_config({"command": "density", "seed": 2**64})
        with self.assertRaises(ConfigValidationError):
            parse_config({"command": "plot"})

    def test_generated_sets_follow_the_seed(self):
        params = {"alpha": 0.5, "E": {"kind": "random_union", "params": {"gamma": 0.3, "t_max": 10.0}}}
        first = validate(parse_config({"command": "density", "params": params, "seed": 1})).cleaned_data["E"]
        again = validate(parse_config({"command": "density", "params": params, "seed": 1})).cleaned_data["E"]
        self.assertIsInstance(first, RadialSet)
        self.assertEqual(first.to_json(), again.to_json())

    def test_form_level_rules(self):
        cases = [
            ("pls-sweep", {"alpha": 0.5, "E": HALF_BLOCKS, "R_list": [8, 4]}),
            ("multiband", {"alpha": 0.5, "N": 2, "E": HALF_BLOCKS}),
            ("multiband", {"alpha": 0.5, "N": 2, "E": HALF_BLOCKS, "positions": [[2, 40]], "samples": 3}),
            ("bernstein", {"alpha": 0.5, "R_list": [0.5]}),
            ("damped-wave", {**DAMPED_WAVE, "L": 10.0}),
            ("nazarov-turan", {"N": 1, "M": 1, "interval": [1.0, 0.0]}),
        ]
        for command, params in cases:
            with self.subTest(command=command, params=params):
                with self.assertRaises(ConfigValidationError):
                    validate(parse_config({"command": command, "params": params}))

    def test_nazarov_turan_small_calibration(self):
        config = parse_config({"command": "nazarov-turan", "params": {"N": 2, "M": 1, "trials": 20}, "seed": 3}, output_dir="unused")
        outcome = execute(config, threads=2)
        self.assertEqual(outcome.summary["calibration"]["trials"], 20)
        self.assertEqual(outcome.summary["calibration"]["violations"], 0)
        rows = list(csv.reader(io.StringIO(outcome.files["trials.csv"])))
        self.assertEqual(len(rows), 21)
