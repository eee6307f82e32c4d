"""
Run a scenario to t_end, recording diagnostics on cadence.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.conf import solver_setting
from core.exceptions import AdmissibilityError
from state.measures import StateMeasure, alpha_and_horizon, dominating_measure
from typespace.admissibility import check_admissible

from .diagnostics import measure
from .integrators import build_step_tables, step

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """States and diagnostics at the recorded output times of one run."""

    scenario: object
    horizon: object
    report: object
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    defects: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    clip_mass: float = 0.0
    tables: object = None
    every_step: bool = False

    @property
    def model(self):
        return self.scenario.model

    @property
    def grid(self):
        return self.scenario.grid

    @property
    def kappa(self):
        return [state.density for state in self.states]

    @property
    def lam(self):
        return [defect.density for defect in self.defects]

    @property
    def final_kappa(self):
        return self.states[-1].density

    @property
    def final_lam(self):
        return self.defects[-1].density

    @property
    def initial_mass(self):
        first = self.diagnostics[0]
        return first.mass_mu + first.mass_lambda

    @property
    def accepted(self):
        """Clipped mass stays below the accepted fraction of the total."""
        return self.clip_mass <= solver_setting("CLIP_ACCEPT_FRACTION") * max(self.initial_mass, np.finfo(float).tiny)

    def record(self, t, state, defect):
        self.times.append(float(t))
        self.states.append(state)
        self.defects.append(defect)
        self.diagnostics.append(measure(t, state, defect, self.model, self.horizon, self.clip_mass))

    def stacked(self):
        """(times, kappa, lambda) as arrays of shape (T,), (T, M, cells), (T, 2M, cells)."""
        return np.array(self.times), np.array(self.kappa), np.array(self.lam)


def run(scenario, force=False, cadence=None, every_step=False, tables=None):
    """
    Integrate the truncated system from the scenario's initial data.

    The admissibility gate refuses models failing a mandatory check unless
    `force` is set. `every_step` records every step, as the minimal
    iteration needs.
    """
    model, grid = scenario.model, scenario.grid
    report = check_admissible(model)
    if not report.passed:
        if not force:
            raise AdmissibilityError(report)
        logger.warning(f"Running inadmissible model for {scenario.name} (forced): {report.failed_mandatory()}")

    horizon = alpha_and_horizon(model, dominating_measure(scenario.initial))
    cadence = 1 if every_step else (cadence or scenario.cadence)
    steps = scenario.num_steps
    logger.info(
        f"Running {scenario.name}: integrator={scenario.integrator}, M={model.num_classes}, "
        f"N={grid.cells_per_axis}^{grid.dim}, steps={steps}, alpha={horizon.alpha:.6g}, zeta_lower={horizon.zeta_lower:.6g}"
    )
    if scenario.t_end > horizon.zeta_lower:
        logger.info(f"t_end={scenario.t_end} lies beyond the guaranteed existence time {horizon.zeta_lower:.6g}")

    if tables is None and steps:
        tables = build_step_tables(grid, model, scenario.dt)
    trajectory = Trajectory(scenario, horizon, report, tables=tables, every_step=cadence == 1)
    state, defect = scenario.initial_state
    kappa, lam = state.density, defect.density
    trajectory.record(0.0, state, defect)
    tripped = set()

    for n in range(1, steps + 1):
        result = step(scenario, kappa, lam, tables)
        kappa, lam = result.kappa, result.lam
        trajectory.clip_mass += result.clip_mass
        if n % cadence == 0 or n == steps:
            trajectory.record(n * scenario.dt, StateMeasure(grid, kappa, model.mass_unit), defect.with_density(lam))
            _watch_bounds(trajectory.diagnostics[-1], tripped, scenario.name)

    if not trajectory.accepted:
        logger.warning(f"{scenario.name}: clipped mass {trajectory.clip_mass:.3e} exceeds the accepted fraction")
    logger.info(f"Finished {scenario.name} at t={trajectory.times[-1]:.6g} ({len(trajectory.times)} output times)")
    return trajectory


def _watch_bounds(row, tripped, name):
    for flag in ("bound_horizon_ok", "bound_global_ok"):
        if getattr(row, flag) is False and flag not in tripped:
            tripped.add(flag)
            logger.warning(f"{name}: {flag} monitor tripped at t={row.t:.6g} (w2_sup={row.w2_sup:.6g})")
