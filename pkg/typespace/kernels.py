"""
Discrete type space on integer multiples of a mass unit.

Live particles occupy classes 1..M, defect particles classes 1..2M, so every
per-class vector on a Model covers 2M classes and the kernel table is 2M x 2M.
Coagulation of classes i and j always produces class i + j.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from core.validators import validate_length, validate_positive, validate_shape

logger = logging.getLogger(__name__)

KERNEL_TYPES = ("es", "constant", "table")


@dataclass(frozen=True)
class PhiFamily:
    """
    Sublinear weight function phi on masses.

    power_sum:    sum_k c_k m^(p_k), every p_k <= 1
    floor_linear: max(floor, m)
    tabulated:    values known only at class masses (custom tables)
    """

    name: str
    exponents: tuple = ()
    coefficients: tuple = ()
    floor: float = 0.0
    masses: tuple = ()
    values: tuple = ()

    @classmethod
    def power_sum(cls, exponents, coefficients=None):
        coefficients = coefficients or (1.0,) * len(exponents)
        if any(p > 1 for p in exponents):
            raise ValidationError("power_sum phi needs exponents <= 1 to be sublinear")
        return cls(name="power_sum", exponents=tuple(exponents), coefficients=tuple(coefficients))

    @classmethod
    def floor_linear(cls, floor):
        return cls(name="floor_linear", floor=float(floor))

    @classmethod
    def tabulated(cls, masses, values):
        return cls(name="tabulated", masses=tuple(float(m) for m in masses), values=tuple(float(v) for v in values))

    @property
    def is_tabulated(self):
        return self.name == "tabulated"

    def __call__(self, m):
        m = np.asarray(m, dtype=float)
        if self.name == "power_sum":
            return sum(c * m**p for p, c in zip(self.exponents, self.coefficients, strict=True))
        if self.name == "floor_linear":
            return np.maximum(self.floor, m)
        lookup = dict(zip(self.masses, self.values, strict=True))
        try:
            return np.vectorize(lookup.__getitem__, otypes=[float])(m)
        except KeyError as exc:
            raise ValidationError(f"tabulated phi is only known at class masses, not at {exc.args[0]!r}") from exc

    def to_document(self):
        if self.name == "power_sum":
            return {"name": self.name, "exponents": list(self.exponents), "coefficients": list(self.coefficients)}
        if self.name == "floor_linear":
            return {"name": self.name, "floor": self.floor}
        return {"name": self.name}


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Model:
    """
    Coefficients of the coagulation-diffusion problem on classes 1..2M.

    Immutable after construction; all arrays are read-only, so a Model can be
    shared between workers.
    """

    mass_unit: float
    num_classes: int
    dim: int
    diffusivity: np.ndarray
    weights: np.ndarray
    kernel: np.ndarray
    phi: PhiFamily
    v_weights: np.ndarray | None = None
    kernel_type: str = "table"
    kernel_rate: float | None = field(default=None)

    def __post_init__(self):
        validate_positive(self.mass_unit, "mass_unit")
        if self.num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.dim not in (1, 2, 3):
            raise ValidationError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.kernel_type not in KERNEL_TYPES:
            raise ValidationError(f"kernel type must be one of {KERNEL_TYPES}, got {self.kernel_type!r}")
        size = 2 * self.num_classes
        object.__setattr__(self, "diffusivity", _frozen(self.diffusivity))
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "kernel", _frozen(self.kernel))
        validate_length(self.diffusivity, size, "diffusivity")
        validate_length(self.weights, size, "weights")
        validate_shape(self.kernel, (size, size), "kernel")
        if self.v_weights is not None:
            object.__setattr__(self, "v_weights", _frozen(self.v_weights))
            validate_length(self.v_weights, size, "v_weights")
            if np.any(self.v_weights < 0):
                raise ValidationError("v_weights must be non-negative")
        if np.any(self.diffusivity <= 0) or not np.all(np.isfinite(self.diffusivity)):
            raise ValidationError("diffusivity must be positive and finite for every class")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise ValidationError("weights must be positive and finite for every class")
        if np.any(self.kernel < 0) or not np.all(np.isfinite(self.kernel)):
            raise ValidationError("kernel entries must be non-negative and finite")

    @property
    def num_defect_classes(self):
        return 2 * self.num_classes

    @property
    def masses(self):
        """Class masses m_i = i * mass_unit for i = 1..2M."""
        return self.mass_unit * np.arange(1, self.num_defect_classes + 1, dtype=float)

    @property
    def live_kernel(self):
        m = self.num_classes
        return self.kernel[:m, :m]

    @property
    def v_over_w_max(self):
        """C = max v_i / w_i, or None when no v is attached."""
        if self.v_weights is None:
            return None
        return float(np.max(self.v_weights / self.weights))

    def truncated(self, num_classes):
        """Restrict to live classes 1..num_classes (and defect classes 1..2*num_classes)."""
        if not 1 <= num_classes <= self.num_classes:
            raise ValidationError(f"truncation level {num_classes} outside 1..{self.num_classes}")
        size = 2 * num_classes
        return Model(
            mass_unit=self.mass_unit,
            num_classes=num_classes,
            dim=self.dim,
            diffusivity=self.diffusivity[:size],
            weights=self.weights[:size],
            kernel=self.kernel[:size, :size],
            phi=self.phi,
            v_weights=None if self.v_weights is None else self.v_weights[:size],
            kernel_type=self.kernel_type,
            kernel_rate=self.kernel_rate,
        )

    def to_document(self):
        """JSON document in the scenario model schema."""
        kernel = {"type": self.kernel_type}
        if self.kernel_type == "constant":
            kernel["rate"] = self.kernel_rate
        elif self.kernel_type == "table":
            kernel["table"] = self.kernel.tolist()
        return {
            "dim": self.dim,
            "mass_unit": self.mass_unit,
            "num_classes": self.num_classes,
            "diffusivity": self.diffusivity.tolist(),
            "weights": self.weights.tolist(),
            "v_weights": None if self.v_weights is None else self.v_weights.tolist(),
            "kernel": kernel,
        }


def build_es_model(num_classes, mass_unit=1.0):
    """
    Einstein-Smoluchowski model in three dimensions.

    a(m) = m^(-1/3), K = (a + a')(m^(1/3) + m'^(1/3)), phi(m) = m^(1/6) + m^(5/6),
    so w = m^(-1/3) + m^(1/3) and v = 2 m^(-1/3).
    """
    validate_positive(mass_unit, "mass_unit")
    if num_classes < 1:
        raise ValidationError(f"num_classes must be >= 1, got {num_classes}")
    masses = mass_unit * np.arange(1, 2 * num_classes + 1, dtype=float)
    inv_cube = masses ** (-1.0 / 3.0)
    cube = masses ** (1.0 / 3.0)
    kernel = (inv_cube[:, None] + inv_cube[None, :]) * (cube[:, None] + cube[None, :])
    return Model(
        mass_unit=mass_unit,
        num_classes=num_classes,
        dim=3,
        diffusivity=inv_cube,
        weights=inv_cube + cube,
        kernel=kernel,
        phi=PhiFamily.power_sum((1.0 / 6.0, 5.0 / 6.0)),
        v_weights=2.0 * inv_cube,
        kernel_type="es",
    )


def build_constant_model(num_classes, mass_unit=1.0, rate=1.0, a_const=1.0, dim=1):
    """
    Constant kernel K = rate with constant diffusivity.

    phi(m) = max(sqrt(rate) * a^(-d/2), m) makes w >= sqrt(rate), hence K <= w w'.
    """
    if not np.isfinite(rate) or rate < 0:
        raise ValidationError(f"rate must be non-negative, got {rate!r}")
    validate_positive(a_const, "a_const")
    validate_positive(mass_unit, "mass_unit")
    size = 2 * num_classes
    masses = mass_unit * np.arange(1, size + 1, dtype=float)
    scale = a_const ** (dim / 2.0)
    phi = PhiFamily.floor_linear(np.sqrt(rate) / scale)
    weights = scale * phi(masses)
    kernel = np.full((size, size), float(rate))
    if np.any(kernel > np.outer(weights, weights) * (1.0 + 1e-12)):
        raise ValidationError("no dominating weight could be built for this constant kernel")
    return Model(
        mass_unit=mass_unit,
        num_classes=num_classes,
        dim=dim,
        diffusivity=np.full(size, float(a_const)),
        weights=weights,
        kernel=kernel,
        phi=phi,
        kernel_type="constant",
        kernel_rate=float(rate),
    )


def build_table_model(num_classes, mass_unit, dim, diffusivity, weights, kernel, v_weights=None):
    """Custom dense tables; phi is recovered at class masses as w / a^(d/2)."""
    size = 2 * num_classes
    diffusivity = np.asarray(diffusivity, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if diffusivity.size == 1:
        diffusivity = np.full(size, float(diffusivity.reshape(-1)[0]))
    validate_length(diffusivity, size, "diffusivity")
    validate_length(weights, size, "weights")
    masses = mass_unit * np.arange(1, size + 1, dtype=float)
    if np.any(diffusivity <= 0):
        raise ValidationError("diffusivity must be positive for every class")
    phi = PhiFamily.tabulated(masses, weights / diffusivity ** (dim / 2.0))
    logger.debug(f"Built table model with {num_classes} live classes in d={dim}")
    return Model(
        mass_unit=mass_unit,
        num_classes=num_classes,
        dim=dim,
        diffusivity=diffusivity,
        weights=weights,
        kernel=np.asarray(kernel, dtype=float),
        phi=phi,
        v_weights=v_weights,
        kernel_type="table",
    )
