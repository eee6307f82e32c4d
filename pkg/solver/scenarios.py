"""
Scenarios: a model, a grid, initial data and time-stepping parameters.

Initial data covers classes 1..2M. Classes up to M start in the live
population, classes M+1..2M start in the defect population.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from core.conf import solver_setting
from core.validators import validate_nonnegative, validate_positive
from heatflow.propagators import wrapped_gaussian_profile
from state.measures import DefectState, StateMeasure
from state.snapshots import load_snapshot

logger = logging.getLogger(__name__)

INTEGRATORS = ("strang", "duhamel")
INIT_KINDS = ("monodisperse", "profile", "file")
PROFILE_SHAPES = ("gaussian", "cosine")


@dataclass(frozen=True)
class InitialCondition:
    """
    Recipe for initial data, re-sampled on whatever grid it is asked for.

    monodisperse: uniform `density` in `mass_class`
    profile:      `background` plus a wrapped Gaussian (`amount`, `variance`,
                  `center`) or a cosine (`amplitude`, `wavenumber`) along axis 0
    file:         a snapshot CSV at `path`, fixed to its own grid
    """

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ValidationError(f"init kind must be one of {INIT_KINDS}, got {self.kind!r}")

    @property
    def resamplable(self):
        return self.kind != "file"

    def sample(self, grid, num_classes):
        """Density of shape (num_classes, cells) on `grid`."""
        params = self.parameters
        if self.kind == "file":
            return load_snapshot(Path(params["path"]), grid, num_classes)
        mass_class = int(params.get("mass_class", 1))
        if not 1 <= mass_class <= num_classes:
            raise ValidationError(f"mass_class {mass_class} outside 1..{num_classes}")
        density = np.zeros((num_classes, grid.num_cells))
        if self.kind == "monodisperse":
            value = float(params.get("density", 1.0))
            validate_nonnegative(value, "density")
            density[mass_class - 1] = value
            return density
        background = float(params.get("background", 0.0))
        validate_nonnegative(background, "background")
        shape = params.get("shape", "gaussian")
        if shape == "gaussian":
            amount = float(params.get("amount", 1.0))
            validate_nonnegative(amount, "amount")
            profile = wrapped_gaussian_profile(grid, float(params.get("variance", 0.01)), params.get("center"), amount)
        elif shape == "cosine":
            amplitude = float(params.get("amplitude", 0.0))
            if abs(amplitude) > background:
                raise ValidationError("cosine amplitude must not exceed the background (density would go negative)")
            wavenumber = int(params.get("wavenumber", 1))
            x = grid.centers()
            wave = np.cos(2.0 * np.pi * wavenumber * x / grid.length)
            along_first_axis = np.broadcast_to(wave.reshape((-1,) + (1,) * (grid.dim - 1)), grid.shape)
            profile = amplitude * along_first_axis.reshape(-1)
        else:
            raise ValidationError(f"profile shape must be one of {PROFILE_SHAPES}, got {shape!r}")
        density[mass_class - 1] = background + profile
        return density

    def to_dict(self):
        return {"kind": self.kind, "parameters": dict(self.parameters)}


@dataclass(frozen=True, eq=False)
class Scenario:
    model: object
    grid: object
    init: InitialCondition
    dt: float
    t_end: float
    integrator: str = "strang"
    picard_tol: float = field(default_factory=lambda: solver_setting("PICARD_TOL"))
    picard_kmax: int = field(default_factory=lambda: solver_setting("PICARD_KMAX"))
    cadence: int = 1
    snapshots: bool = False
    name: str = "scenario"

    def __post_init__(self):
        validate_positive(self.dt, "dt")
        validate_nonnegative(self.t_end, "t_end")
        validate_positive(self.picard_tol, "picard_tol")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.picard_kmax < 1:
            raise ValidationError("picard_kmax must be >= 1")
        if self.cadence < 1:
            raise ValidationError("cadence must be >= 1")
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > solver_setting("STEP_MATCH_RTOL") * max(1.0, self.t_end):
            raise ValidationError(f"t_end={self.t_end} is not a whole number of steps of dt={self.dt}")

    @property
    def num_steps(self):
        return round(self.t_end / self.dt)

    @cached_property
    def initial(self):
        """Initial density on classes 1..2M."""
        density = self.init.sample(self.grid, self.model.num_defect_classes)
        density.setflags(write=False)
        return density

    @cached_property
    def initial_state(self):
        """(StateMeasure on 1..M, DefectState on 1..2M) at t = 0; heavy classes start as defects."""
        m = self.model.num_classes
        live = StateMeasure(self.grid, np.array(self.initial[:m]), self.model.mass_unit)
        lam = np.zeros_like(self.initial)
        lam[m:] = self.initial[m:]
        defect = DefectState(self.grid, lam, self.model.weights, self.model.mass_unit)
        live.density.setflags(write=False)
        defect.density.setflags(write=False)
        return live, defect

    @property
    def kappa0(self):
        return np.array(self.initial_state[0].density)

    @property
    def lambda0(self):
        return np.array(self.initial_state[1].density)

    def truncated(self, num_classes):
        """Same scenario at a smaller live range; initial data must fit in 1..2*num_classes."""
        if np.any(self.initial[2 * num_classes :]):
            raise ValidationError(f"initial data reaches beyond class {2 * num_classes}; cannot truncate to M={num_classes}")
        return replace(self, model=self.model.truncated(num_classes))

    def with_dt(self, dt):
        return replace(self, dt=dt)

    def with_grid(self, grid):
        if not self.init.resamplable:
            raise ValidationError("file initial data cannot be re-sampled on another grid")
        return replace(self, grid=grid)

    def to_dict(self):
        return {
            "name": self.name,
            "model": self.model.to_document(),
            "grid": self.grid.to_dict(),
            "init": self.init.to_dict(),
            "time": {
                "dt": self.dt,
                "t_end": self.t_end,
                "integrator": self.integrator,
                "picard_tol": self.picard_tol,
                "picard_kmax": self.picard_kmax,
                "cadence": self.cadence,
            },
        }
