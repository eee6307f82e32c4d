"""
One-step maps for the truncated system.

step_strang:  half diffusion, sub-cycled two-stage SSP coagulation, half diffusion.
step_duhamel: trapezoidal one-step mild map solved by Picard iteration;
              picard_iterates yields the iterates for any flux.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from coagulation.fluxes import c_field, truncated_flux
from core.conf import solver_setting
from core.exceptions import ConvergenceError, StabilityError
from heatflow.propagators import build_propagator, diffuse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepTables:
    """Propagator tables for half and full steps, built once per run."""

    half: object
    full: object

    def to_dict(self):
        return {"half": self.half.to_dict(), "full": self.full.to_dict()}


def build_step_tables(grid, model, dt):
    return StepTables(half=build_propagator(grid, model, dt / 2.0), full=build_propagator(grid, model, dt))


@dataclass(frozen=True, eq=False)
class StepResult:
    kappa: np.ndarray
    lam: np.ndarray
    clip_mass: float = 0.0
    substeps: int = 1
    iterations: int = 0


def _max_rate(kappa, lam, model):
    rates = c_field(kappa, lam, model)
    return float(rates.max()) if rates.size else 0.0


def _euler(kappa, lam, model, h):
    rate = _max_rate(kappa, lam, model)
    limit = solver_setting("STAGE_POSITIVITY_LIMIT")
    if rate * h > limit:
        raise StabilityError(rate, h, limit)
    flux = truncated_flux(kappa, lam, model)
    return kappa + h * flux.dkappa, lam + h * flux.dlambda


def _ssp_rk2(kappa, lam, model, h):
    stage_kappa, stage_lam = _euler(kappa, lam, model, h)
    next_kappa, next_lam = _euler(stage_kappa, stage_lam, model, h)
    return 0.5 * (kappa + next_kappa), 0.5 * (lam + next_lam)


def step_strang(kappa, lam, model, tables, dt):
    limit = solver_setting("STABILITY_LIMIT")
    max_substeps = solver_setting("MAX_SUBSTEPS")
    kappa = diffuse(kappa, tables.half)
    lam = diffuse(lam, tables.half)
    c_max = _max_rate(kappa, lam, model)
    substeps = max(1, math.ceil(c_max * dt / limit))
    if substeps > max_substeps:
        raise StabilityError(c_max, dt, limit * max_substeps)
    if substeps > 1:
        logger.debug(f"Sub-cycling coagulation: {substeps} substeps (c_max={c_max:.4g}, dt={dt:.4g})")
    h = dt / substeps
    for _ in range(substeps):
        kappa, lam = _ssp_rk2(kappa, lam, model, h)
    return StepResult(diffuse(kappa, tables.half), diffuse(lam, tables.half), substeps=substeps)


def _clip(density, masses, cell_volume):
    negative = np.minimum(density, 0.0)
    if not negative.any():
        return density, 0.0
    return np.maximum(density, 0.0), float(-(masses[: density.shape[0]] @ negative.sum(axis=1)) * cell_volume)


def picard_iterates(kappa, lam, model, tables, dt, flux=truncated_flux):
    """
    Endless Picard iterates of the trapezoidal mild step, the first being
    (P kappa, P lambda). `flux(kappa, lam, model)` returns a CoagFlux.
    """
    half = 0.5 * dt
    start = flux(kappa, lam, model)
    base_kappa = diffuse(kappa + half * start.dkappa, tables.full)
    base_lam = diffuse(lam + half * start.dlambda, tables.full)
    current_kappa = diffuse(kappa, tables.full)
    current_lam = diffuse(lam, tables.full)
    while True:
        yield current_kappa, current_lam
        rates = flux(current_kappa, current_lam, model)
        current_kappa = base_kappa + half * rates.dkappa
        current_lam = base_lam + half * rates.dlambda


def step_duhamel(kappa, lam, model, tables, dt, tol=None, kmax=None):
    """
    kappa1 = P(kappa0 + dt/2 F(state0)) + dt/2 F(state1), likewise for lambda,
    iterated from (P kappa0, P lambda0) until the sup change is below
    tol * max(1, sup). Negative undershoots are clipped and their mass returned.
    """
    tol = solver_setting("PICARD_TOL") if tol is None else tol
    kmax = solver_setting("PICARD_KMAX") if kmax is None else kmax
    limit = solver_setting("STABILITY_LIMIT")
    c_max = _max_rate(kappa, lam, model)
    if c_max * dt > limit:
        raise StabilityError(c_max, dt, limit)

    iterates = picard_iterates(kappa, lam, model, tables, dt)
    current_kappa, current_lam = next(iterates)
    for iteration in range(1, kmax + 1):
        next_kappa, next_lam = next(iterates)
        change = max(np.abs(next_kappa - current_kappa).max(initial=0.0), np.abs(next_lam - current_lam).max(initial=0.0))
        scale = max(1.0, np.abs(next_kappa).max(initial=0.0), np.abs(next_lam).max(initial=0.0))
        current_kappa, current_lam = next_kappa, next_lam
        if change <= tol * scale:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not converge in {kmax} iterations (last change {change:.3e}); "
            f"reduce dt below {dt:.4g}"
        )

    grid = tables.full.grid
    current_kappa, clipped_kappa = _clip(current_kappa, model.masses, grid.cell_volume)
    current_lam, clipped_lam = _clip(current_lam, model.masses, grid.cell_volume)
    return StepResult(current_kappa, current_lam, clip_mass=clipped_kappa + clipped_lam, iterations=iteration)


def step(scenario, kappa, lam, tables):
    if scenario.integrator == "duhamel":
        return step_duhamel(
            kappa, lam, scenario.model, tables, scenario.dt, scenario.picard_tol, scenario.picard_kmax
        )
    return step_strang(kappa, lam, scenario.model, tables, scenario.dt)
