"""
Management command to print alpha = <w^2, mu*> and the guaranteed existence
time for a scenario's initial data.
"""

from cli.base import ScenarioCommand
from state.measures import alpha_and_horizon, dominating_measure, moment_summary


class Command(ScenarioCommand):
    help = "Print alpha, zeta_lower and the dominating measure of a scenario's initial data"

    def handle(self, *args, **options):
        scenario = self.load(options).scenario
        with self.solver_errors():
            dominating = dominating_measure(scenario.initial)
            horizon = alpha_and_horizon(scenario.model, dominating)
            summary = moment_summary(scenario.model, scenario.initial, scenario.grid)

        self.write_json(
            {
                "scenario": scenario.name,
                **horizon.to_dict(),
                "dominating_measure": dominating.values,
                "moments": summary.to_dict(),
            }
        )
