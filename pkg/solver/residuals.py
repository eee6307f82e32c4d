"""
Weak-form residual of a recorded trajectory against a test function.
"""

import numpy as np
from django.core.exceptions import ValidationError
from scipy.integrate import cumulative_trapezoid

from coagulation.fluxes import truncated_flux


def periodic_laplacian(values, grid):
    """Centered second differences on the torus, summed over axes, per class."""
    field = values.reshape((values.shape[0], *grid.shape))
    out = np.zeros_like(field)
    if grid.cells_per_axis > 1:
        for axis in range(1, grid.dim + 1):
            out += np.roll(field, 1, axis=axis) - 2.0 * field + np.roll(field, -1, axis=axis)
        out /= grid.spacing**2
    return out.reshape(values.shape)


def _test_function(f, model, grid):
    f = np.asarray(f, dtype=float)
    m = model.num_classes
    if f.ndim == 1:
        f = np.repeat(f[:, None], grid.num_cells, axis=1)
    if f.shape[1] != grid.num_cells:
        raise ValidationError(f"test function covers {f.shape[1]} cells, grid has {grid.num_cells}")
    if f.shape[0] > m:
        if np.any(f[m:]):
            raise ValidationError(f"test function must be supported on classes 1..{m}")
        f = f[:m]
    if f.shape[0] < m:
        f = np.vstack([f, np.zeros((m - f.shape[0], grid.num_cells))])
    return f


def weak_residual(trajectory, f):
    """
    residual(t) = (f, mu_t) - (f, mu_0) - int_0^t (a/2 Lap_h f, mu_s) + (f, K(mu_s)) ds

    f is per class (M,) or per class and cell (M, cells); the time integral
    is trapezoidal over the recorded output times and K pairs f with the
    live-range flux of the truncated system.
    """
    model, grid = trajectory.model, trajectory.grid
    f = _test_function(f, model, grid)
    a = model.diffusivity[: model.num_classes, None]
    generator = 0.5 * a * periodic_laplacian(f, grid)
    volume = grid.cell_volume
    pairing, rate = [], []
    for kappa, lam in zip(trajectory.kappa, trajectory.lam, strict=True):
        flux = truncated_flux(kappa, lam, model)
        pairing.append(float(np.sum(f * kappa)) * volume)
        rate.append(float(np.sum(generator * kappa) + np.sum(f * flux.dkappa)) * volume)
    integral = cumulative_trapezoid(rate, trajectory.times, initial=0.0)
    return np.asarray(pairing) - pairing[0] - integral
