"""
Management command for refinement studies along dt, dx or the live range M.
"""

from dataclasses import asdict
from pathlib import Path

from cli.base import ScenarioCommand
from cli.outputs import write_table
from solver.refinement import converge_dt, converge_dx, refine_in_M


class Command(ScenarioCommand):
    help = "Refine a scenario in dt, dx or M and write the refinement table"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--grid", choices=("dt", "dx", "M"), default="dt", help="Refinement axis (default: dt)")
        parser.add_argument(
            "--levels",
            type=int,
            default=3,
            help="Number of refinement levels (default: 3)",
        )
        parser.add_argument("--force", action="store_true", help="Run inadmissible models anyway")
        parser.add_argument("--out-dir", type=Path, default=None, help="Directory for the refinement CSV")

    def handle(self, *args, **options):
        loaded = self.load(options)
        scenario = loaded.scenario
        axis = options["grid"]
        levels = max(1, options["levels"])
        output_dir = options["out_dir"] or loaded.output_dir

        with self.solver_errors():
            if axis == "M":
                m = scenario.model.num_classes
                live_ranges = sorted({max(1, m // 2**k) for k in range(levels)})
                report = refine_in_M(scenario, live_ranges, force=options["force"])
                rows = list(report.rows())
            elif axis == "dx":
                rows = [asdict(row) for row in converge_dx(scenario, levels, force=options["force"])]
            else:
                rows = [asdict(row) for row in converge_dt(scenario, levels, force=options["force"])]

        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / f"convergence_{axis}.csv"
        write_table(path, rows)

        for row in rows:
            self.stdout.write("  " + ", ".join(f"{key}={value}" for key, value in row.items()))
        if axis == "M":
            style = self.style.SUCCESS if report.clean else self.style.WARNING
            verdict = "monotone" if report.clean else "monotonicity violated"
            self.stdout.write(style(f"{scenario.name}: M levels {live_ranges} {verdict}"))
        self.stdout.write(f"  wrote {path}")
