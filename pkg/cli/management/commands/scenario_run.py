"""
Management command to run a scenario and write its artifacts.
"""

from pathlib import Path

from cli.base import ScenarioCommand
from cli.outputs import write_run_outputs
from solver.runs import run


class Command(ScenarioCommand):
    help = "Run a scenario and write diagnostics.csv, snapshots and manifest.json"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--force",
            action="store_true",
            help="Run even if the model fails a mandatory admissibility check",
        )
        parser.add_argument(
            "--cadence",
            type=int,
            default=None,
            help="Record every N-th step (default: the scenario's cadence)",
        )
        parser.add_argument(
            "--out-dir",
            type=Path,
            default=None,
            help="Output directory (default: outputs.dir or OUTPUT_ROOT/<name>)",
        )

    def handle(self, *args, **options):
        loaded = self.load(options)
        scenario = loaded.scenario
        output_dir = options["out_dir"] or loaded.output_dir
        if options["cadence"] is not None and options["cadence"] < 1:
            self.stderr.write(self.style.WARNING("Ignoring --cadence below 1"))
            options["cadence"] = None

        with self.solver_errors():
            trajectory = run(scenario, force=options["force"], cadence=options["cadence"])

        written = write_run_outputs(trajectory, output_dir, forced=options["force"])
        final = trajectory.diagnostics[-1]

        self.stdout.write(self.style.SUCCESS(f"{scenario.name}: reached t={final.t:g} in {scenario.num_steps} steps"))
        self.stdout.write(f"  mass (mu + lambda): {final.mass_mu + final.mass_lambda:.12g}")
        self.stdout.write(f"  clipped mass: {trajectory.clip_mass:.3e}")
        if not trajectory.accepted:
            self.stdout.write(self.style.WARNING("  clipped mass exceeds the accepted fraction"))
        for path in written:
            self.stdout.write(f"  wrote {path}")
