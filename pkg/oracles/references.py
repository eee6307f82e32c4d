"""
Independent reference solutions and run-vs-reference error reports.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from core.conf import solver_setting
from core.exceptions import BlowUpError
from core.validators import validate_nonnegative, validate_positive
from heatflow.propagators import profile_variance, wrapped_gaussian_profile

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Reference:
    """
    values has shape (times, classes, cells). Homogeneous references have a
    single cell of unit volume, so their errors are concentration errors.
    """

    times: np.ndarray
    values: np.ndarray
    provenance: str
    cell_volume: float = 1.0

    def at(self, t):
        index = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[index] - t) > solver_setting("TIME_MATCH_RTOL") * max(1.0, abs(t)):
            raise ValidationError(f"reference has no output at t={t}")
        return self.values[index]


def _step_indices(times, dt, t_end):
    indices = []
    for t in times:
        if t < 0 or t > t_end * (1 + solver_setting("TIME_MATCH_RTOL")):
            raise ValidationError(f"output time {t} outside [0, {t_end}]")
        n = round(t / dt)
        if abs(n * dt - t) > solver_setting("TIME_MATCH_RTOL") * max(1.0, t):
            raise ValidationError(f"output time {t} is not a multiple of dt_ref={dt}")
        indices.append(n)
    return indices


def _smoluchowski_rhs(model):
    size = model.num_defect_classes
    kernel = model.kernel
    product = np.add.outer(np.arange(size), np.arange(size)) + 1
    inside = product < size
    targets = product[inside]

    def rhs(n):
        pairs = kernel * np.outer(n, n)
        formed = 0.5 * np.bincount(targets, weights=pairs[inside], minlength=size)
        return formed - n * (kernel @ n)

    return rhs


def homogeneous_ode(model, n0, t_end, dt_ref, times=None):
    """
    Classic RK4 on the spatially homogeneous Smoluchowski system over classes
    1..2M: dn_k/dt = 1/2 sum_{i+j=k} K(i,j) n_i n_j - n_k sum_j K(k,j) n_j.
    """
    validate_positive(dt_ref, "dt_ref")
    validate_nonnegative(t_end, "t_end")
    size = model.num_defect_classes
    n = np.zeros(size)
    n0 = np.asarray(n0, dtype=float).reshape(-1)
    if n0.size > size:
        raise ValidationError(f"initial data covers {n0.size} classes, model has {size}")
    n[: n0.size] = n0
    times = [0.0, t_end] if times is None else sorted(float(t) for t in times)
    steps = round(t_end / dt_ref)
    if abs(steps * dt_ref - t_end) > solver_setting("TIME_MATCH_RTOL") * max(1.0, t_end):
        raise ValidationError(f"t_end={t_end} is not a multiple of dt_ref={dt_ref}")
    wanted = _step_indices(times, dt_ref, t_end)
    limit = solver_setting("BLOWUP_LIMIT")
    rhs = _smoluchowski_rhs(model)

    values = np.empty((len(times), size, 1))
    for slot, index in enumerate(wanted):
        if index == 0:
            values[slot, :, 0] = n
    h = dt_ref
    for step in range(1, steps + 1):
        k1 = rhs(n)
        k2 = rhs(n + 0.5 * h * k1)
        k3 = rhs(n + 0.5 * h * k2)
        k4 = rhs(n + h * k3)
        n = n + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(n)) or np.abs(n).max() > limit:
            worst = int(np.argmax(np.where(np.isfinite(n), np.abs(n), np.inf)))
            raise BlowUpError(f"Reference blew up at t={step * h:.6g}: class {worst + 1} reached {n[worst]:.3e}")
        for slot, index in enumerate(wanted):
            if index == step:
                values[slot, :, 0] = n
    logger.debug(f"RK4 reference over {size} classes: {steps} steps of {dt_ref}")
    return Reference(np.asarray(times), values, "ode-rk4")


def constant_kernel_closed_form(times, num_classes):
    """n_k(t) = (t/2)^(k-1) (1 + t/2)^(-k-1): K = 1, unit monodisperse start."""
    times = np.asarray(times, dtype=float)
    k = np.arange(1, num_classes + 1)
    half = times[:, None] / 2.0
    values = half ** (k - 1) * (1.0 + half) ** (-(k + 1.0))
    return Reference(times, values[:, :, None], "closed-form")


def diffusion_reference(grid, diffusivity, initial_variance, times, center=None, amount=1.0):
    """Wrapped Gaussian with per-axis variance initial_variance + a t."""
    validate_positive(diffusivity, "diffusivity")
    validate_positive(initial_variance, "initial_variance")
    times = np.asarray(times, dtype=float)
    widest = np.sqrt(initial_variance + diffusivity * times.max(initial=0.0))
    if widest >= grid.length / 6.0:
        raise ValidationError(
            f"Profile width {widest:.4g} is not below L/6={grid.length / 6.0:.4g}; wrap would not be negligible"
        )
    values = np.array(
        [wrapped_gaussian_profile(grid, initial_variance + diffusivity * t, center, amount)[None, :] for t in times]
    )
    return Reference(times, values, "closed-form", cell_volume=grid.cell_volume)


@dataclass
class ErrorReport:
    provenance: str
    times: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    per_class: list = field(default_factory=list)

    @property
    def max_l1(self):
        return max(self.l1, default=0.0)

    @property
    def max_linf(self):
        return max(self.linf, default=0.0)

    def rows(self):
        for t, l1, linf, classes in zip(self.times, self.l1, self.linf, self.per_class, strict=True):
            yield {"t": t, "l1": l1, "linf": linf, **{f"class_{i + 1}": value for i, value in enumerate(classes)}}

    def to_dict(self):
        return {"provenance": self.provenance, "max_l1": self.max_l1, "max_linf": self.max_linf, "times": self.times}


def _as_series(output):
    if hasattr(output, "kappa"):
        return np.asarray(output.times, dtype=float), np.asarray(output.kappa, dtype=float)
    times, values = output
    return np.asarray(times, dtype=float), np.asarray(values, dtype=float)


def compare(run_output, reference):
    """
    Normwise errors at matched times over the classes both sides cover.

    run_output is a Trajectory or a (times, values) pair with values shaped
    like reference.values. Interpolation in time is never attempted.
    """
    times, values = _as_series(run_output)
    if times.shape != reference.times.shape or np.any(
        np.abs(times - reference.times) > solver_setting("TIME_MATCH_RTOL") * np.maximum(1.0, np.abs(times))
    ):
        raise ValidationError("run and reference output times do not match; align the cadence")
    if values.shape[2] != reference.values.shape[2]:
        raise ValidationError(f"run has {values.shape[2]} cells, reference has {reference.values.shape[2]}")
    classes = min(values.shape[1], reference.values.shape[1])
    report = ErrorReport(reference.provenance)
    for t, run_state, ref_state in zip(times, values[:, :classes], reference.values[:, :classes], strict=True):
        difference = np.abs(run_state - ref_state)
        per_class = difference.sum(axis=1) * reference.cell_volume
        report.times.append(float(t))
        report.per_class.append([float(v) for v in per_class])
        report.l1.append(float(per_class.sum()))
        report.linf.append(float(difference.max(initial=0.0)))
    return report


def variance_errors(run_output, reference, grid, center=None):
    """Relative error of the per-axis profile variance (summed over classes) at each matched time."""
    times, values = _as_series(run_output)
    errors = []
    for t, run_state, ref_state in zip(times, values, reference.values, strict=True):
        expected = profile_variance(ref_state.sum(axis=0), grid, center)
        observed = profile_variance(run_state.sum(axis=0), grid, center)
        errors.append((float(t), float(np.max(np.abs(observed - expected) / expected))))
    return errors
