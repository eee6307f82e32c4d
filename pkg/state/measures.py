"""
Densities on spatial grid x mass class.

Every density is stored class-major as an array of shape (classes, cells),
cells flattened in C order over the d grid axes. Integrals carry the cell
volume dx^d so L1 quantities stay grid-independent under refinement.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from core.validators import validate_density, validate_positive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform torus [0, L)^d with N cells per axis."""

    dim: int
    cells_per_axis: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"grid dim must be 1, 2 or 3, got {self.dim}")
        if self.cells_per_axis < 1:
            raise ValidationError(f"cells_per_axis must be >= 1, got {self.cells_per_axis}")
        validate_positive(self.length, "length")

    @property
    def spacing(self):
        return self.length / self.cells_per_axis

    @property
    def num_cells(self):
        return self.cells_per_axis**self.dim

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    @property
    def shape(self):
        return (self.cells_per_axis,) * self.dim

    def centers(self):
        """Cell-center coordinates along one axis."""
        return (np.arange(self.cells_per_axis) + 0.5) * self.spacing

    def cell_indices(self):
        """(num_cells, dim) integer index tuples in storage order."""
        return np.array(np.unravel_index(np.arange(self.num_cells), self.shape)).T

    def refined(self, factor=2):
        return SpatialGrid(self.dim, self.cells_per_axis * factor, self.length)

    def to_dict(self):
        return {"dim": self.dim, "cells_per_axis": self.cells_per_axis, "length": self.length}


def _checked(grid, density, rows, name):
    density = validate_density(density, name)
    if density.ndim != 2 or density.shape != (rows, grid.num_cells):
        raise ValidationError(f"{name} has shape {density.shape}, expected {(rows, grid.num_cells)}")
    return density


@dataclass(frozen=True, eq=False)
class StateMeasure:
    """Live population on classes 1..M: density[i, cell] >= 0."""

    grid: SpatialGrid
    density: np.ndarray
    mass_unit: float = 1.0

    def __post_init__(self):
        density = np.asarray(self.density, dtype=float)
        object.__setattr__(self, "density", _checked(self.grid, density, density.shape[0], "StateMeasure density"))

    @property
    def num_classes(self):
        return self.density.shape[0]

    @property
    def masses(self):
        return self.mass_unit * np.arange(1, self.num_classes + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class DefectState:
    """
    Defect population on classes 1..2M with its weight field eta = <w, lambda>.

    Instances are values: with_density() returns a new state with eta
    recomputed, so eta can never go stale.
    """

    grid: SpatialGrid
    density: np.ndarray
    weights: np.ndarray
    mass_unit: float = 1.0
    eta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        density = _checked(self.grid, np.asarray(self.density, dtype=float), weights.size, "DefectState density")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "eta", weights @ density)

    @property
    def num_classes(self):
        return self.density.shape[0]

    @property
    def masses(self):
        return self.mass_unit * np.arange(1, self.num_classes + 1, dtype=float)

    def with_density(self, density):
        return DefectState(self.grid, density, self.weights, self.mass_unit)


@dataclass(frozen=True)
class DominatingMeasure:
    """Constant-in-x bound mu*_i on the initial density."""

    values: np.ndarray


@dataclass(frozen=True)
class HorizonEstimate:
    alpha: float
    zeta_lower: float

    @property
    def finite(self):
        return np.isfinite(self.zeta_lower)

    def to_dict(self):
        # JSON has no infinity
        return {"alpha": self.alpha, "zeta_lower": self.zeta_lower if self.finite else None}


def _density_of(measure):
    return measure.density if hasattr(measure, "density") else np.asarray(measure, dtype=float)


def bracket(f, measure):
    """Per-cell field <f, kappa>(cell) = sum_i f_i kappa[i, cell]."""
    density = _density_of(measure)
    f = np.asarray(f, dtype=float)
    if f.shape[0] != density.shape[0]:
        raise ValidationError(f"f covers {f.shape[0]} classes but the density has {density.shape[0]}")
    if f.ndim == 2:
        return np.einsum("ic,ic->c", f, density)
    return f @ density


def norm_l1(values, grid):
    return float(np.sum(np.abs(values)) * grid.cell_volume)


def norm_inf(values):
    values = np.asarray(values)
    return float(np.max(np.abs(values))) if values.size else 0.0


def total_mass(measure, grid=None, mass_unit=None):
    """
    Total mass sum_i m_i sum_cells kappa[i, cell] dx^d.

    Plain arrays need the grid and mass unit passed explicitly.
    """
    grid = grid or measure.grid
    if mass_unit is None:
        mass_unit = measure.mass_unit
    density = _density_of(measure)
    masses = mass_unit * np.arange(1, density.shape[0] + 1, dtype=float)
    return float(masses @ density.sum(axis=1) * grid.cell_volume)


def dominating_measure(measure):
    """Tightest constant-in-x dominating measure: per-class max over cells."""
    density = _density_of(measure)
    if density.shape[1] == 0:
        return DominatingMeasure(np.zeros(density.shape[0]))
    return DominatingMeasure(density.max(axis=1))


def alpha_and_horizon(model, dominating):
    """alpha = <w^2, mu*> and the guaranteed existence time 1/alpha."""
    values = dominating.values if isinstance(dominating, DominatingMeasure) else np.asarray(dominating, dtype=float)
    if values.size > model.num_defect_classes:
        raise ValidationError(f"dominating measure covers {values.size} classes, model has {model.num_defect_classes}")
    alpha = float(model.weights[: values.size] ** 2 @ values)
    zeta = np.inf if alpha == 0 else 1.0 / alpha
    return HorizonEstimate(alpha, zeta)


@dataclass(frozen=True)
class MomentSummary:
    w_l1: float
    mw_l1: float
    alpha: float
    zeta_lower: float
    global_existence: bool

    @property
    def conservative(self):
        """Finite <m w, mu0> in L1 means the solution conserves mass up to its horizon."""
        return bool(np.isfinite(self.mw_l1))

    def to_dict(self):
        return {
            "w_l1": self.w_l1,
            "mw_l1": self.mw_l1,
            "conservative": self.conservative,
            "alpha": self.alpha,
            "zeta_lower": self.zeta_lower if np.isfinite(self.zeta_lower) else None,
            "global_existence": self.global_existence,
        }


def moment_summary(model, density, grid, report=None):
    """
    Moments of initial data on classes 1..2M and the existence verdict.

    Existence is global when alpha is finite and K <= w v + v w
    with a^(-d/2) v w subadditive.
    """
    from typespace.admissibility import check_admissible

    density = np.asarray(density, dtype=float)
    size = density.shape[0]
    weights = model.weights[:size]
    masses = model.masses[:size]
    horizon = alpha_and_horizon(model, dominating_measure(density))
    report = report or check_admissible(model)
    return MomentSummary(
        w_l1=norm_l1(weights @ density, grid),
        mw_l1=norm_l1((masses * weights) @ density, grid),
        alpha=horizon.alpha,
        zeta_lower=horizon.zeta_lower,
        global_existence=bool(np.isfinite(horizon.alpha) and report.global_existence),
    )
