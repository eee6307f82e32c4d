"""
Refinement studies: monotonicity in the live range M, the minimal-solution
iteration with a frozen killed propagator, and empirical orders in dt and dx.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from coagulation.fluxes import c_field, gain
from core.conf import solver_setting
from core.exceptions import HistoryLimitError
from heatflow.propagators import diffuse, propagate_with_potential, propagate_with_potential_trapezoid
from state.measures import norm_l1

from .integrators import build_step_tables
from .runs import run

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelComparison:
    """Worst excesses between consecutive live ranges M < M_next over all output times."""

    level: int
    next_level: int
    worst_kappa_excess: float
    worst_moment_excess: float
    kappa_violations: int
    moment_violations: int

    @property
    def clean(self):
        return not (self.kappa_violations or self.moment_violations)


@dataclass
class MonotonicityReport:
    levels: list
    times: list
    comparisons: list = field(default_factory=list)
    eta_l1: dict = field(default_factory=dict)
    eta_violations: int = 0

    @property
    def clean(self):
        return all(c.clean for c in self.comparisons) and not self.eta_violations

    def rows(self):
        """One row per level for the refinement table."""
        by_level = {c.level: c for c in self.comparisons}
        for level in self.levels:
            comparison = by_level.get(level)
            yield {
                "M": level,
                "next_M": comparison.next_level if comparison else None,
                "worst_kappa_excess": comparison.worst_kappa_excess if comparison else None,
                "worst_moment_excess": comparison.worst_moment_excess if comparison else None,
                "violations": (comparison.kappa_violations + comparison.moment_violations) if comparison else None,
                "eta_l1_final": self.eta_l1[level][-1],
            }


def refine_in_M(scenario, levels, force=False):
    """
    Run the scenario at each live range in `levels` and check, at every
    matched output time, kappa^M <= kappa^M' + eps and
    <w, kappa^M> + eta^M >= <w, kappa^M'> + eta^M' - eps for consecutive M < M'.
    """
    levels = sorted(set(int(level) for level in levels))
    if not levels or levels[0] < 1 or levels[-1] > scenario.model.num_classes:
        raise ValidationError(f"levels must lie in 1..{scenario.model.num_classes}, got {levels}")
    epsilon = solver_setting("REFINE_EPSILON")
    trajectories = {}
    for level in levels:
        logger.info(f"Refinement run at M={level}")
        trajectories[level] = run(scenario.truncated(level), force=force)

    times = trajectories[levels[0]].times
    report = MonotonicityReport(levels=levels, times=times)
    for level in levels:
        report.eta_l1[level] = [row.eta_l1 for row in trajectories[level].diagnostics]

    w = scenario.model.weights
    for level, next_level in zip(levels, levels[1:], strict=False):
        coarse, fine = trajectories[level], trajectories[next_level]
        worst_kappa = worst_moment = -np.inf
        kappa_violations = moment_violations = 0
        for n in range(len(times)):
            low, high = coarse.kappa[n], fine.kappa[n]
            scale = max(1.0, float(np.abs(high).max(initial=0.0)))
            excess = float((low - high[:level]).max(initial=-np.inf))
            worst_kappa = max(worst_kappa, excess)
            kappa_violations += int(excess > epsilon * scale)

            low_moment = w[:level] @ low + w[: 2 * level] @ coarse.lam[n]
            high_moment = w[:next_level] @ high + w[: 2 * next_level] @ fine.lam[n]
            scale = max(1.0, float(np.abs(low_moment).max(initial=0.0)))
            excess = float((high_moment - low_moment).max(initial=-np.inf))
            worst_moment = max(worst_moment, excess)
            moment_violations += int(excess > epsilon * scale)

            if report.eta_l1[next_level][n] > report.eta_l1[level][n] + epsilon * max(1.0, report.eta_l1[level][n]):
                report.eta_violations += 1
        report.comparisons.append(
            LevelComparison(level, next_level, worst_kappa, worst_moment, kappa_violations, moment_violations)
        )
    if report.clean:
        logger.info(f"Monotone in M across levels {levels}")
    else:
        logger.warning(f"Monotonicity in M violated across levels {levels}")
    return report


@dataclass
class MinimalIteration:
    """Iterates nu^k from below; gaps[k] = sup_t ||nu^k_t - mu_t||_L1."""

    times: np.ndarray
    gaps: list = field(default_factory=list)
    excess: list = field(default_factory=list)
    final_states: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    latest: np.ndarray | None = None

    @property
    def iterations(self):
        return len(self.gaps)


def minimal_iteration(scenario, kmax=30, trajectory=None, force=False, keep_iterates=False):
    """
    Iterate nu^(k+1) = frozen killed propagation of kappa0 plus the Duhamel
    gain integral of nu^k, with the loss rate frozen from a completed run.

    Duhamel runs use the trapezoidal killed propagator, which makes the run an
    exact fixed point; splitting runs use the Strang form. Only the final
    state of each iterate is kept unless `keep_iterates` is set, in which case
    the whole history of every nu^k counts against the storage limit.
    """
    model, grid = scenario.model, scenario.grid
    m = model.num_classes
    steps = scenario.num_steps
    stored = (steps + 1) * grid.num_cells * (3 * m + 2 * m)
    if keep_iterates:
        stored += (kmax + 1) * (steps + 1) * grid.num_cells * m
    if stored > solver_setting("MAX_HISTORY_VALUES"):
        raise HistoryLimitError(
            f"Minimal iteration would store {stored} values (limit {solver_setting('MAX_HISTORY_VALUES')}); "
            "shorten t_end or coarsen the grid"
        )
    if trajectory is None:
        trajectory = run(scenario, force=force, every_step=True)
    if len(trajectory.times) != steps + 1:
        raise ValidationError("minimal iteration needs a run recorded at every step")

    times, mu, lam = trajectory.stacked()
    rates = np.array([c_field(mu[n], lam[n], model) for n in range(steps + 1)])
    tables = trajectory.tables or build_step_tables(grid, model, scenario.dt)
    h = scenario.dt
    trapezoid = scenario.integrator == "duhamel"

    def sweep(previous):
        gains = [0.5 * h * gain(previous[n], model)[:m] for n in range(steps + 1)]
        current = np.empty_like(mu)
        current[0] = mu[0]
        for n in range(steps):
            if trapezoid:
                killed = propagate_with_potential_trapezoid(current[n], rates[n], rates[n + 1], tables.full, h)
                sourced = (diffuse(gains[n], tables.full) + gains[n + 1]) / (1.0 + 0.5 * h * rates[n + 1])
                current[n + 1] = killed + sourced
            else:
                frozen = 0.5 * (rates[n] + rates[n + 1])
                current[n + 1] = propagate_with_potential(current[n] + gains[n], frozen, tables.full, h) + gains[n + 1]
        return current

    result = MinimalIteration(times=times)
    iterate = np.zeros_like(mu)
    for k in range(kmax + 1):
        following = sweep(iterate)
        gap = max(norm_l1(following[n] - mu[n], grid) for n in range(steps + 1))
        result.gaps.append(gap)
        result.excess.append(float((following - mu).max(initial=0.0)))
        result.final_states.append(following[-1])
        if keep_iterates:
            result.iterates.append(following)
        logger.debug(f"Minimal iteration k={k}: gap={gap:.3e}")
        if k and np.array_equal(following, iterate):
            iterate = following
            break
        iterate = following
    result.latest = iterate
    return result


@dataclass(frozen=True)
class RefinementRow:
    level: int
    parameter: float
    difference: float | None
    order: float | None


def _observed_orders(parameters, differences):
    rows = []
    for k, parameter in enumerate(parameters):
        difference = differences[k] if k < len(differences) else None
        order = None
        if k + 1 < len(differences) and differences[k] > 0 and differences[k + 1] > 0:
            order = float(np.log2(differences[k] / differences[k + 1]))
        rows.append(RefinementRow(k, parameter, difference, order))
    return rows


def _state_distance(a, b, grid):
    return norm_l1(a[0] - b[0], grid) + norm_l1(a[1] - b[1], grid)


def converge_dt(scenario, levels=3, force=False):
    """Halve dt `levels - 1` times; successive-difference orders at t_end."""
    dts = [scenario.dt / 2**k for k in range(levels)]
    solutions = []
    for dt in dts:
        trajectory = run(scenario.with_dt(dt), force=force, cadence=max(1, round(scenario.t_end / dt)))
        solutions.append((trajectory.final_kappa, trajectory.final_lam))
    differences = [_state_distance(solutions[k], solutions[k + 1], scenario.grid) for k in range(levels - 1)]
    return _observed_orders(dts, differences)


def restrict(density, fine_grid, factor=2):
    """Average each block of factor^d fine cells onto one coarse cell."""
    n = fine_grid.cells_per_axis // factor
    blocks = density.reshape((density.shape[0],) + (n, factor) * fine_grid.dim)
    return blocks.mean(axis=tuple(range(2, 2 + 2 * fine_grid.dim, 2))).reshape(density.shape[0], -1)


def converge_dx(scenario, levels=3, force=False):
    """Double the cells per axis `levels - 1` times; fine solutions are averaged onto the coarser grid."""
    grids = [scenario.grid.refined(2**k) for k in range(levels)]
    solutions = []
    for grid in grids:
        trajectory = run(scenario.with_grid(grid), force=force, cadence=max(1, scenario.num_steps))
        solutions.append((trajectory.final_kappa, trajectory.final_lam))
    differences = []
    for k in range(levels - 1):
        restricted = tuple(restrict(part, grids[k + 1]) for part in solutions[k + 1])
        differences.append(_state_distance(solutions[k], restricted, grids[k]))
    return _observed_orders([grid.spacing for grid in grids], differences)
