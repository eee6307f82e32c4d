"""
Shared plumbing for the scenario_* management commands.

Exit codes: 0 ok, 1 failed check or validation, 2 unreadable or invalid
scenario file, 3 numerical failure at runtime.
"""

import logging
from contextlib import contextmanager
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import AdmissibilityError, SolverError

from .outputs import dump_json
from .scenario_files import ScenarioFileError, load_scenario

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_RUNTIME = 3


class ScenarioCommand(BaseCommand):
    def add_arguments(self, parser):
        parser.add_argument("scenario_path", type=Path, help="Path to a scenario JSON file")

    def load(self, options):
        try:
            return load_scenario(options["scenario_path"])
        except ScenarioFileError as e:
            raise CommandError(f"Invalid scenario file {e}", returncode=EXIT_INVALID) from e

    def write_json(self, document):
        self.stdout.write(dump_json(document), ending="")

    @contextmanager
    def solver_errors(self):
        """Translate solver exceptions into CommandError with the matching exit code."""
        try:
            yield
        except AdmissibilityError as e:
            raise CommandError(str(e), returncode=EXIT_FAILED) from e
        except SolverError as e:
            logger.error(f"Solver failure: {e}")
            raise CommandError(str(e), returncode=EXIT_RUNTIME) from e
        except ValidationError as e:
            raise CommandError("; ".join(e.messages), returncode=EXIT_FAILED) from e
