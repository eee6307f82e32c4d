"""
Management command to run the admissibility checks on a scenario's model.
Prints the report as JSON; exits 1 when a mandatory check fails.
"""

from django.core.management.base import CommandError

from cli.base import EXIT_FAILED, ScenarioCommand
from typespace.admissibility import check_admissible


class Command(ScenarioCommand):
    help = "Check a scenario's model for admissibility (symmetry, domination, monotone diffusivity, sublinear phi)"

    def handle(self, *args, **options):
        scenario = self.load(options).scenario
        report = check_admissible(scenario.model)
        self.write_json({"scenario": scenario.name, **report.to_dict()})

        if not report.passed:
            raise CommandError(
                f"{scenario.name}: failed {', '.join(report.failed_mandatory())}", returncode=EXIT_FAILED
            )
        self.stderr.write(self.style.SUCCESS(f"{scenario.name}: all mandatory checks passed"))
