"""
Shared precondition validators for all solver apps.
"""

import numpy as np
from django.core.exceptions import ValidationError


def validate_positive(value, name):
    """Validate a strictly positive finite scalar."""
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")


def validate_nonnegative(value, name):
    if not np.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be non-negative and finite, got {value!r}")


def validate_density(array, name):
    """Validate a density array: finite entries, none negative."""
    array = np.asarray(array, dtype=float)
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite entries")
    if np.any(array < 0):
        raise ValidationError(f"{name} contains negative entries (min {array.min():.3e})")
    return array


def validate_length(vector, expected, name):
    """Validate a per-class vector covers exactly the expected number of classes."""
    if len(vector) != expected:
        raise ValidationError(f"{name} has length {len(vector)}, expected {expected}")


def validate_shape(array, expected, name):
    if tuple(array.shape) != tuple(expected):
        raise ValidationError(f"{name} has shape {tuple(array.shape)}, expected {tuple(expected)}")
