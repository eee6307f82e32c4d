"""
Coagulation gain/loss and the truncated system with defect bookkeeping.

Inputs are class-major densities: kappa (M, cells) for live classes,
lam (2M, cells) for defect classes. Pair (i, j) produces class i + j.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoagFlux:
    """Rate densities for live (dkappa, M rows) and defect (dlambda, 2M rows) classes."""

    dkappa: np.ndarray
    dlambda: np.ndarray

    def mass_rate(self, masses):
        """Net mass rate per cell; zero up to rounding."""
        m = self.dkappa.shape[0]
        return masses[:m] @ self.dkappa + masses[: self.dlambda.shape[0]] @ self.dlambda

    def number_rate(self):
        """Net particle-count rate per cell; never positive."""
        return self.dkappa.sum(axis=0) + self.dlambda.sum(axis=0)


def _live(kappa, model):
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim == 1:
        kappa = kappa[:, None]
    if kappa.shape[0] != model.num_classes:
        raise ValidationError(f"kappa has {kappa.shape[0]} classes, model has {model.num_classes}")
    return kappa


def _column(values, cell):
    return values if cell is None else values[:, cell]


def gain(kappa, model, cell=None):
    """
    g_k = 1/2 sum_{i+j=k; i,j<=M} K(i,j) kappa_i kappa_j for k = 1..2M.

    Returns (2M, cells), or the (2M,) column of `cell`.
    """
    kappa = _live(kappa, model)
    m = model.num_classes
    kernel = model.kernel
    out = np.zeros((2 * m, kappa.shape[1]))
    for a in range(m):
        # classes (a+1) + (b+1) land at zero-based index a + b + 1
        out[a + 1 : a + 1 + m] += 0.5 * kernel[a, :m, None] * kappa[a] * kappa
    return _column(out, cell)


def loss(kappa, model, cell=None):
    """l_i = kappa_i sum_{j<=M} K(i,j) kappa_j, ordered pairs, no 1/2."""
    kappa = _live(kappa, model)
    return _column(kappa * (model.live_kernel @ kappa), cell)


def eta(lam, model):
    """Defect weight field eta = sum_i w_i lambda_i."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape[0] != model.num_defect_classes:
        raise ValidationError(f"lambda has {lam.shape[0]} classes, model has {model.num_defect_classes}")
    return model.weights @ lam


def truncated_flux(kappa, lam, model):
    """
    Right-hand side of the truncated system at live range M = model.num_classes.

    Products above M are routed by mass into defect classes M+1..2M; live
    particles convert into the defect population at rate w_k * eta.
    """
    kappa = _live(kappa, model)
    m = model.num_classes
    w = model.weights[:m, None]
    g = gain(kappa, model)
    field = eta(lam, model)
    conversion = w * field * kappa
    dkappa = g[:m] - loss(kappa, model) - conversion
    dlambda = np.zeros_like(g)
    dlambda[m:] = g[m:]
    dlambda[:m] = conversion
    return CoagFlux(dkappa, dlambda)


def c_field(kappa, lam, model):
    """Total loss rate c_i(cell) = sum_j K(i,j) kappa_j + w_i eta(cell)."""
    kappa = _live(kappa, model)
    m = model.num_classes
    return model.live_kernel @ kappa + model.weights[:m, None] * eta(lam, model)
