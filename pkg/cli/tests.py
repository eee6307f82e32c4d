"""
Unit tests for the cli app.
Tests scenario files and the scenario_* management commands end to end.
"""

import csv
import json
from io import StringIO
from pathlib import Path
from tempfile import TemporaryDirectory

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .scenario_files import ScenarioFileError, load_scenario


def shipped(name):
    return Path(settings.SCENARIO_DIR) / f"{name}.json"


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        tmp = TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def call(self, name, path, **options):
        stdout = StringIO()
        call_command(name, str(path), stdout=stdout, stderr=StringIO(), **options)
        return stdout.getvalue()

    def variant(self, name, edit, filename="variant.json"):
        """Write a copy of a shipped scenario after applying edit(document)."""
        document = json.loads(shipped(name).read_text())
        edit(document)
        path = self.tmp / filename
        path.write_text(json.dumps(document))
        return path

    def read_csv(self, path):
        with open(path, newline="") as handle:
            return list(csv.DictReader(handle))


class ScenarioFileTests(CommandTestCase):
    """Tests for load_scenario."""

    def test_shipped_scenarios_load(self):
        """Test that every shipped scenario loads under its own name."""
        for name in ("es_uniform", "es_smooth", "constant_homogeneous", "gaussian_diffusion", "increasing_diffusivity"):
            loaded = load_scenario(shipped(name))
            self.assertEqual(loaded.scenario.name, name)

    def test_es_uniform_fields(self):
        """Test the model, grid and time fields read from es_uniform."""
        scenario = load_scenario(shipped("es_uniform")).scenario
        self.assertEqual(scenario.model.num_classes, 64)
        self.assertEqual(scenario.grid.num_cells, 32)
        self.assertEqual(scenario.num_steps, 1000)
        self.assertEqual(scenario.cadence, 10)

    def test_unknown_keys_rejected(self):
        """Test that unknown keys are rejected at every nesting level."""
        for edit in (
            lambda doc: doc.update(extra=1),
            lambda doc: doc["time"].update(tolerance=1e-3),
            lambda doc: doc["model"]["kernel"].update(power=2),
            lambda doc: doc["init"]["parameters"].update(width=0.1),
        ):
            with self.assertRaises(ScenarioFileError):
                load_scenario(self.variant("es_uniform", edit))

    def test_solver_preconditions_are_schema_errors(self):
        """Test that a dt not dividing t_end surfaces as a scenario file error."""
        path = self.variant("es_uniform", lambda doc: doc["time"].update(dt=0.3))
        with self.assertRaises(ScenarioFileError) as ctx:
            load_scenario(path)
        self.assertIn("whole number of steps", str(ctx.exception))

    def test_es_needs_three_dimensions(self):
        """Test that an ES model in 2D is a scenario file error."""
        with self.assertRaises(ScenarioFileError):
            load_scenario(self.variant("es_uniform", lambda doc: doc["model"].update(dim=2)))

    def test_output_dir_relative_to_file(self):
        """Test that outputs.dir resolves against the scenario file's directory."""
        path = self.variant("es_uniform", lambda doc: doc.update(outputs={"dir": "out"}))
        self.assertEqual(load_scenario(path).output_dir, self.tmp / "out")

    def test_file_initial_data(self):
        """Test that file initial data keeps only the rows at the first time."""
        snapshot = self.tmp / "start.csv"
        snapshot.write_text("time,class,cell_0,density\n0,1,0,2.5\n0,2,3,1\n1,1,0,9\n")
        path = self.variant(
            "increasing_diffusivity", lambda doc: doc.update(init={"kind": "file", "parameters": {"path": "start.csv"}})
        )
        initial = load_scenario(path).scenario.initial
        self.assertEqual(initial[0, 0], 2.5)
        self.assertEqual(initial[1, 3], 1.0)
        self.assertEqual(initial.sum(), 3.5)


class CheckCommandTests(CommandTestCase):
    """Tests for scenario_check."""

    def test_es_model_passes(self):
        """Test that the ES scenario passes every check with no violations."""
        report = json.loads(self.call("scenario_check", shipped("es_uniform")))
        self.assertTrue(report["passed"])
        self.assertTrue(report["vw_bound"])
        self.assertTrue(report["avw_subadditive"])
        self.assertEqual(report["violations"], [])

    def test_increasing_diffusivity_fails_with_witness(self):
        """Test that a failed mandatory check exits 1 and still prints the report with its witness."""
        stdout = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command("scenario_check", str(shipped("increasing_diffusivity")), stdout=stdout, stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)
        report = json.loads(stdout.getvalue())
        self.assertFalse(report["diffusivity_K_decreasing"])
        self.assertIn("diffusivity_K_decreasing", {v["check"] for v in report["violations"]})

    def test_malformed_json(self):
        """Test that malformed JSON exits 2."""
        path = self.tmp / "broken.json"
        path.write_text("{")
        with self.assertRaises(CommandError) as ctx:
            self.call("scenario_check", path)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_file(self):
        """Test that a missing scenario file exits 2."""
        with self.assertRaises(CommandError) as ctx:
            self.call("scenario_check", self.tmp / "absent.json")
        self.assertEqual(ctx.exception.returncode, 2)

    def test_ragged_kernel_table(self):
        """Test that a ragged kernel table exits with the schema error code."""
        path = self.variant("increasing_diffusivity", lambda doc: doc["model"]["kernel"]["table"][1].pop())
        with self.assertRaises(CommandError) as ctx:
            self.call("scenario_check", path)
        self.assertEqual(ctx.exception.returncode, 2)


class HorizonCommandTests(CommandTestCase):
    """Tests for scenario_horizon."""

    def test_es_monodisperse(self):
        """Test that unit ES data reports alpha = 4, zeta = 0.25 and the dominating measure."""
        result = json.loads(self.call("scenario_horizon", shipped("es_uniform")))
        self.assertAlmostEqual(result["alpha"], 4.0, delta=1e-12)
        self.assertAlmostEqual(result["zeta_lower"], 0.25, delta=1e-12)
        self.assertEqual(result["dominating_measure"][0], 1.0)

    def test_alpha_is_linear_in_density(self):
        """Test that doubling the density doubles alpha."""
        path = self.variant("es_uniform", lambda doc: doc["init"]["parameters"].update(density=2.0))
        result = json.loads(self.call("scenario_horizon", path))
        self.assertAlmostEqual(result["alpha"], 8.0, delta=1e-12)

    def test_empty_initial_data(self):
        """Test that empty data prints alpha = 0 and a null horizon."""
        path = self.variant("es_uniform", lambda doc: doc["init"]["parameters"].update(density=0.0))
        result = json.loads(self.call("scenario_horizon", path))
        self.assertEqual(result["alpha"], 0.0)
        self.assertIsNone(result["zeta_lower"])


class RunCommandTests(CommandTestCase):
    """Tests for scenario_run."""

    def test_outputs_are_byte_identical(self):
        """Test that two runs write byte-identical files."""
        first, second = self.tmp / "first", self.tmp / "second"
        self.call("scenario_run", shipped("gaussian_diffusion"), out_dir=first)
        self.call("scenario_run", shipped("gaussian_diffusion"), out_dir=second)
        for name in ("diagnostics.csv", "snapshots.csv", "defect_snapshots.csv", "manifest.json"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

    def test_zero_kernel_mass_constant(self):
        """Test that pure diffusion keeps the live mass constant on every row."""
        self.call("scenario_run", shipped("gaussian_diffusion"), out_dir=self.tmp)
        rows = self.read_csv(self.tmp / "diagnostics.csv")
        self.assertEqual(len(rows), 5)
        masses = [float(row["mass_mu"]) for row in rows]
        for mass in masses:
            self.assertAlmostEqual(mass / masses[0], 1.0, delta=1e-12)

    def test_zero_horizon_single_row(self):
        """Test that t_end = 0 writes a header and a single row."""
        path = self.variant("es_smooth", lambda doc: doc["time"].update(t_end=0.0))
        self.call("scenario_run", path, out_dir=self.tmp)
        lines = (self.tmp / "diagnostics.csv").read_text().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertTrue(lines[0].startswith("t,mass_mu,mass_lambda"))

    def test_manifest_records_settings(self):
        """Test that the manifest records every tolerance alongside the scenario and the run summary."""
        self.call("scenario_run", shipped("es_smooth"), out_dir=self.tmp, cadence=5)
        manifest = json.loads((self.tmp / "manifest.json").read_text())
        self.assertEqual(manifest["settings"]["STABILITY_LIMIT"], 0.5)
        self.assertEqual(manifest["settings"]["STAGE_POSITIVITY_LIMIT"], 1.0)
        self.assertEqual(manifest["settings"]["STEP_MATCH_RTOL"], 1e-9)
        self.assertEqual(manifest["settings"]["TIME_MATCH_RTOL"], 1e-9)
        self.assertEqual(manifest["settings"]["DERIVED_MATCH_RTOL"], 1e-12)
        self.assertEqual(manifest["scenario"]["name"], "es_smooth")
        self.assertEqual(manifest["output_times"], 3)
        self.assertFalse(manifest["forced"])

    def test_admissibility_gate(self):
        """Test that an inadmissible scenario exits 1 unless forced, and the manifest notes forcing."""
        with self.assertRaises(CommandError) as ctx:
            self.call("scenario_run", shipped("increasing_diffusivity"), out_dir=self.tmp)
        self.assertEqual(ctx.exception.returncode, 1)
        self.call("scenario_run", shipped("increasing_diffusivity"), out_dir=self.tmp, force=True)
        self.assertTrue(json.loads((self.tmp / "manifest.json").read_text())["forced"])

    def test_stability_failure_exit_code(self):
        """Test that a stiff step exits 3 with c_max in the message."""
        def stiff(doc):
            doc["init"]["parameters"]["density"] = 1000.0
            doc["time"].update(dt=0.1, t_end=0.1)

        with self.assertRaises(CommandError) as ctx:
            self.call("scenario_run", self.variant("constant_homogeneous", stiff), out_dir=self.tmp)
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertIn("c_max", str(ctx.exception))

    def test_es_uniform_conserves_mass(self):
        """Test that the shipped ES run conserves mass and keeps the global bound."""
        self.call("scenario_run", shipped("es_uniform"), out_dir=self.tmp)
        rows = self.read_csv(self.tmp / "diagnostics.csv")
        totals = [float(row["mass_mu"]) + float(row["mass_lambda"]) for row in rows]
        for total in totals:
            self.assertAlmostEqual(total / totals[0], 1.0, delta=1e-10)
        self.assertTrue(all(row["bound_global_ok"] == "1" for row in rows))


class ConvergeCommandTests(CommandTestCase):
    """Tests for scenario_converge."""

    def test_M_axis_constant_kernel_is_monotone(self):
        """Test that the M study on K = 1 reports monotone levels without violations."""
        output = self.call("scenario_converge", shipped("constant_homogeneous"), grid="M", out_dir=self.tmp)
        self.assertIn("monotone", output)
        rows = self.read_csv(self.tmp / "convergence_M.csv")
        self.assertEqual([row["M"] for row in rows], ["8", "16", "32"])
        self.assertTrue(all(row["violations"] in ("0", "") for row in rows))

    def test_single_level_has_no_order(self):
        """Test that a one-level study leaves the order column empty."""
        self.call("scenario_converge", shipped("es_smooth"), grid="dt", levels=1, out_dir=self.tmp)
        rows = self.read_csv(self.tmp / "convergence_dt.csv")
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]["order"], "")

    def test_dt_axis_second_order(self):
        """Test that the dt study of es_smooth observes second order."""
        self.call("scenario_converge", shipped("es_smooth"), grid="dt", levels=3, out_dir=self.tmp)
        rows = self.read_csv(self.tmp / "convergence_dt.csv")
        self.assertGreaterEqual(float(rows[0]["order"]), 1.5)


class OracleCommandTests(CommandTestCase):
    """Tests for scenario_oracle."""

    def test_constant_homogeneous(self):
        """Test that the homogeneous K = 1 scenario is checked against both references."""
        self.call("scenario_oracle", shipped("constant_homogeneous"), out_dir=self.tmp)
        report = json.loads((self.tmp / "oracle_report.json").read_text())
        self.assertEqual(report["kind"], "homogeneous")
        self.assertLessEqual(report["reports"]["ode-rk4"]["max_l1"], 1e-4)
        self.assertLessEqual(report["reports"]["closed-form"]["max_l1"], 1e-4)
        self.assertTrue((self.tmp / "oracle_closed-form.csv").exists())
        self.assertTrue((self.tmp / "reference_ode-rk4.csv").exists())

    def test_gaussian_diffusion(self):
        """Test that the pure-diffusion scenario meets the variance tolerance."""
        self.call("scenario_oracle", shipped("gaussian_diffusion"), out_dir=self.tmp)
        report = json.loads((self.tmp / "oracle_report.json").read_text())
        self.assertEqual(report["kind"], "diffusion")
        self.assertLessEqual(max(row["relative_error"] for row in report["variance_errors"]), 0.02)

    def test_no_oracle_applies(self):
        """Test that a scenario with no applicable reference exits 1."""
        with self.assertRaises(CommandError) as ctx:
            self.call("scenario_oracle", shipped("es_smooth"), out_dir=self.tmp)
        self.assertEqual(ctx.exception.returncode, 1)
