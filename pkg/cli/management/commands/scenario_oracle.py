"""
Management command to compare a run against an independent reference.

Homogeneous scenarios (one cell) are checked against an RK4 solution of the
Smoluchowski ODE, and against the closed form for K = 1 from unit
monodisperse data. Pure-diffusion scenarios (K = 0) from a Gaussian profile
are checked against the analytic wrapped Gaussian.
"""

import logging
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from cli.base import EXIT_FAILED, ScenarioCommand
from cli.outputs import dump_json, write_table
from core.conf import solver_setting
from oracles.references import (
    Reference,
    compare,
    constant_kernel_closed_form,
    diffusion_reference,
    homogeneous_ode,
    variance_errors,
)
from solver.runs import run
from state.snapshots import write_snapshots

logger = logging.getLogger(__name__)


def _is_unit_monodisperse(initial):
    expected = np.zeros(initial.shape[0])
    expected[0] = 1.0
    return np.array_equal(initial[:, 0], expected)


class Command(ScenarioCommand):
    help = "Compare a homogeneous or pure-diffusion scenario against its reference solution"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--force", action="store_true", help="Run inadmissible models anyway")
        parser.add_argument("--out-dir", type=Path, default=None, help="Directory for the comparison report")

    def handle(self, *args, **options):
        loaded = self.load(options)
        scenario = loaded.scenario
        if scenario.grid.num_cells == 1:
            kind = "homogeneous"
        elif not scenario.model.kernel.any():
            kind = "diffusion"
        else:
            raise CommandError(
                f"{scenario.name}: no oracle applies (needs a single cell or a zero kernel)", returncode=EXIT_FAILED
            )

        document = {"scenario": scenario.name, "kind": kind, "reports": {}}
        with self.solver_errors():
            trajectory = run(scenario, force=options["force"])
            if kind == "homogeneous":
                references = self._homogeneous_references(scenario, trajectory)
            else:
                references = [self._diffusion_reference(scenario, trajectory)]
                center = scenario.init.parameters.get("center") or [scenario.grid.length / 2.0] * scenario.grid.dim
                document["variance_errors"] = [
                    {"t": t, "relative_error": error}
                    for t, error in variance_errors(trajectory, references[0], scenario.grid, center)
                ]
            reports = [compare(trajectory, reference) for reference in references]

        output_dir = options["out_dir"] or loaded.output_dir
        output_dir.mkdir(parents=True, exist_ok=True)
        for reference, report in zip(references, reports, strict=True):
            document["reports"][report.provenance] = report.to_dict()
            write_table(output_dir / f"oracle_{report.provenance}.csv", report.rows())
            write_snapshots(
                output_dir / f"reference_{reference.provenance}.csv",
                zip(reference.times, reference.values, strict=True),
                scenario.grid,
                provenance=reference.provenance,
            )
            self.stdout.write(
                f"  {report.provenance}: max L1 error {report.max_l1:.3e}, max sup error {report.max_linf:.3e}"
            )
        if "variance_errors" in document:
            worst = max(row["relative_error"] for row in document["variance_errors"])
            self.stdout.write(f"  worst relative variance error {worst:.3e}")
        (output_dir / "oracle_report.json").write_text(dump_json(document))
        self.stdout.write(self.style.SUCCESS(f"{scenario.name}: {kind} oracle report in {output_dir}"))

    def _homogeneous_references(self, scenario, trajectory):
        model = scenario.model
        dt_ref = scenario.dt * solver_setting("ORACLE_DT_FRACTION")
        references = [
            homogeneous_ode(model, scenario.initial[:, 0], scenario.t_end, dt_ref, times=trajectory.times)
        ]
        if model.kernel_type == "constant" and model.kernel_rate == 1.0 and _is_unit_monodisperse(scenario.initial):
            references.append(constant_kernel_closed_form(trajectory.times, model.num_classes))
        return references

    def _diffusion_reference(self, scenario, trajectory):
        init = scenario.init
        params = init.parameters
        if init.kind != "profile" or params.get("shape", "gaussian") != "gaussian" or params.get("background", 0.0):
            raise CommandError(
                f"{scenario.name}: the diffusion oracle needs a Gaussian profile without background",
                returncode=EXIT_FAILED,
            )
        mass_class = int(params.get("mass_class", 1))
        if mass_class > scenario.model.num_classes:
            raise CommandError(f"{scenario.name}: class {mass_class} starts beyond the live range", returncode=EXIT_FAILED)
        base = diffusion_reference(
            scenario.grid,
            float(scenario.model.diffusivity[mass_class - 1]),
            float(params.get("variance", 0.01)),
            trajectory.times,
            params.get("center"),
            float(params.get("amount", 1.0)),
        )
        values = np.zeros((len(base.times), mass_class, scenario.grid.num_cells))
        values[:, mass_class - 1] = base.values[:, 0]
        logger.debug(f"Diffusion reference for class {mass_class} of {scenario.name}")
        return Reference(base.times, values, base.provenance, base.cell_volume)
