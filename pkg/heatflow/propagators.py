"""
Heat propagators on the torus.

Class i diffuses with variance a_i * dt per axis. The d-dimensional transition
matrix is the Kronecker product of identical 1-D circulant factors, so it is
applied one axis at a time.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from scipy.linalg import circulant

from core.conf import solver_setting
from core.validators import validate_positive

logger = logging.getLogger(__name__)


def _image_count(variance, length):
    # periodic images beyond this many periods contribute below the tail tolerance
    reach = np.sqrt(2.0 * variance * np.log(1.0 / solver_setting("WRAP_TAIL_TOL")))
    return int(np.ceil(reach / length)) + 1


def wrapped_gaussian(offsets, variance, length):
    """Pointwise wrapped Gaussian density at the given signed offsets."""
    offsets = np.asarray(offsets, dtype=float)
    images = np.arange(-_image_count(variance, length), _image_count(variance, length) + 1) * length
    shifted = offsets[..., None] + images
    return np.exp(-(shifted**2) / (2.0 * variance)).sum(axis=-1) / np.sqrt(2.0 * np.pi * variance)


def wrapped_gaussian_profile(grid, variance, center=None, amount=1.0):
    """
    Product wrapped-Gaussian density over all cells, integrating to `amount`
    on the continuum torus. `center` defaults to the middle of the box.
    """
    validate_positive(variance, "variance")
    if center is None:
        center = np.full(grid.dim, grid.length / 2.0)
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    centers = grid.centers()
    profile = np.ones(grid.shape)
    for axis in range(grid.dim):
        factor = wrapped_gaussian(centers - center[axis], variance, grid.length)
        shape = [1] * grid.dim
        shape[axis] = grid.cells_per_axis
        profile = profile * factor.reshape(shape)
    return amount * profile.reshape(-1)


def profile_variance(profile, grid, center=None):
    """
    Per-axis variance of a non-negative cell profile about `center`, using
    minimal-image distances on the torus. `center` defaults to the peak cell.
    """
    profile = np.asarray(profile, dtype=float).reshape(grid.shape)
    if center is None:
        peak = np.unravel_index(np.argmax(profile), grid.shape)
        center = (np.asarray(peak) + 0.5) * grid.spacing
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    total = profile.sum()
    variances = np.empty(grid.dim)
    for axis in range(grid.dim):
        marginal = profile.sum(axis=tuple(a for a in range(grid.dim) if a != axis))
        offsets = grid.centers() - center[axis]
        offsets = offsets - grid.length * np.round(offsets / grid.length)
        variances[axis] = (marginal * offsets**2).sum() / total
    return variances


@dataclass(frozen=True, eq=False)
class PropagatorTable:
    """
    One-step transition for every class: factors[i] is the 1-D circulant
    matrix T_i[cell -> cell] with unit column and row sums.
    """

    grid: object
    dt: float
    diffusivity: np.ndarray
    factors: np.ndarray

    @property
    def num_classes(self):
        return self.factors.shape[0]

    def matrix(self, i):
        """Full N^d x N^d transition matrix of class i (zero-based)."""
        full = np.ones((1, 1))
        for _ in range(self.grid.dim):
            full = np.kron(full, self.factors[i])
        return full

    def to_dict(self):
        return {
            "dt": self.dt,
            "grid": self.grid.to_dict(),
            "num_classes": self.num_classes,
            "wrap_tail_tol": solver_setting("WRAP_TAIL_TOL"),
        }


def _factor(variance, grid):
    n = grid.cells_per_axis
    k = np.arange(n)
    column = wrapped_gaussian(k * grid.spacing, variance, grid.length)
    # exact symmetry of the circulant under k -> n - k
    column = 0.5 * (column + column[(-k) % n])
    column = column / column.sum()
    return circulant(column)


def build_propagator(grid, diffusivity, dt):
    """
    Per-class tables for one step of length dt from per-class diffusivities.

    Passing a Model uses its diffusivities on all 2M classes.
    """
    validate_positive(dt, "dt")
    diffusivity = np.asarray(getattr(diffusivity, "diffusivity", diffusivity), dtype=float).reshape(-1)
    worst = float(diffusivity.max()) * dt
    if worst > (grid.length / 2.0) ** 2:
        raise ValidationError(
            f"Diffusion length sqrt(a*dt)={np.sqrt(worst):.4g} exceeds half the box ({grid.length / 2.0:.4g}); "
            "enlarge the torus or shorten the step"
        )
    factors = np.empty((diffusivity.size, grid.cells_per_axis, grid.cells_per_axis))
    cache = {}
    for i, a in enumerate(diffusivity):
        if a not in cache:
            cache[a] = _factor(a * dt, grid)
        factors[i] = cache[a]
    factors.setflags(write=False)
    logger.debug(f"Built propagator tables for {diffusivity.size} classes, dt={dt}, N={grid.cells_per_axis}")
    return PropagatorTable(grid, float(dt), diffusivity, factors)


def diffuse(density, table):
    """Apply T_i to density[i] for each class; shapes (classes, cells)."""
    density = np.asarray(density, dtype=float)
    grid = table.grid
    classes = density.shape[0]
    if density.ndim != 2 or density.shape[1] != grid.num_cells:
        raise ValidationError(f"density shape {density.shape} does not match {grid.num_cells} cells")
    if classes > table.num_classes:
        raise ValidationError(f"table covers {table.num_classes} classes, density has {classes}")
    if grid.cells_per_axis == 1:
        return density.copy()
    factors = table.factors[:classes]
    field = density.reshape((classes, *grid.shape))
    for axis in range(1, grid.dim + 1):
        moved = np.moveaxis(field, axis, -1)
        field = np.moveaxis(np.einsum("c...q,cpq->c...p", moved, factors), -1, axis)
    return np.ascontiguousarray(field).reshape(classes, grid.num_cells)


def _check_rate(rate, density):
    rate = np.asarray(rate, dtype=float)
    if rate.shape != density.shape:
        raise ValidationError(f"rate field shape {rate.shape} does not match density {density.shape}")
    if np.any(rate < 0) or not np.all(np.isfinite(rate)):
        raise ValidationError("rate field must be non-negative and finite")
    return rate


def propagate_with_potential(density, rate, table, dt):
    """Killed propagator, Strang form: exp(-c dt/2) P exp(-c dt/2)."""
    density = np.asarray(density, dtype=float)
    rate = _check_rate(rate, density)
    damping = np.exp(-0.5 * dt * rate)
    return damping * diffuse(damping * density, table)


def propagate_with_potential_trapezoid(density, rate_start, rate_end, table, dt):
    """
    Killed propagator, trapezoidal form: (1 + dt c1/2)^-1 P (1 - dt c0/2).

    Positivity needs dt * c0 <= 2.
    """
    density = np.asarray(density, dtype=float)
    rate_start = _check_rate(rate_start, density)
    rate_end = _check_rate(rate_end, density)
    if np.any(0.5 * dt * rate_start > 1.0):
        raise ValidationError(f"dt * c_max = {dt * rate_start.max():.4g} > 2 breaks positivity of the trapezoid step")
    return diffuse((1.0 - 0.5 * dt * rate_start) * density, table) / (1.0 + 0.5 * dt * rate_end)
