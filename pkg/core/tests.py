"""
Unit tests for the core app.
Tests shared validators, settings access, exceptions and the strict serializer.
"""

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from rest_framework import serializers

from .conf import DEFAULTS, all_solver_settings, solver_setting
from .exceptions import AdmissibilityError, StabilityError
from .serializers import StrictSerializer
from .validators import validate_density, validate_length, validate_nonnegative, validate_positive, validate_shape


class ValidatorsTests(SimpleTestCase):
    """Tests for the shared precondition validators."""

    def test_validate_positive(self):
        """Test that validate_positive rejects zero, negatives and non-finite values."""
        validate_positive(1e-300, "dt")
        for value in (0.0, -1.0, np.inf, np.nan):
            with self.assertRaises(ValidationError):
                validate_positive(value, "dt")

    def test_validate_nonnegative_accepts_zero(self):
        """Test that zero passes validate_nonnegative while a tiny negative does not."""
        validate_nonnegative(0.0, "t_end")
        with self.assertRaises(ValidationError):
            validate_nonnegative(-1e-12, "t_end")

    def test_validate_density(self):
        """Test that densities are coerced to float and negative or NaN entries are rejected."""
        result = validate_density([[1, 0], [2, 3]], "kappa")
        self.assertEqual(result.dtype, float)
        with self.assertRaises(ValidationError):
            validate_density([[1.0, -0.5]], "kappa")
        with self.assertRaises(ValidationError):
            validate_density([[np.nan]], "kappa")

    def test_validate_length_and_shape(self):
        """Test that length and shape mismatches name the offending field."""
        validate_length([1, 2, 3, 4], 4, "weights")
        with self.assertRaises(ValidationError) as ctx:
            validate_length([1, 2], 4, "weights")
        self.assertIn("weights has length 2, expected 4", ctx.exception.messages[0])
        with self.assertRaises(ValidationError):
            validate_shape(np.zeros((2, 3)), (3, 3), "kernel")


class SolverSettingTests(SimpleTestCase):
    """Tests for solver_setting and all_solver_settings."""

    @override_settings(COAGDIFF={})
    def test_defaults_used_when_absent(self):
        """Test that missing keys fall back to the built-in defaults."""
        self.assertEqual(solver_setting("STABILITY_LIMIT"), 0.5)
        self.assertEqual(all_solver_settings(), DEFAULTS)

    @override_settings(COAGDIFF={"PICARD_TOL": 1e-9})
    def test_override(self):
        """Test that a configured value wins without hiding the other defaults."""
        self.assertEqual(solver_setting("PICARD_TOL"), 1e-9)
        self.assertEqual(all_solver_settings()["PICARD_TOL"], 1e-9)
        self.assertEqual(all_solver_settings()["MAX_SUBSTEPS"], DEFAULTS["MAX_SUBSTEPS"])

    def test_unknown_setting(self):
        """Test that asking for an undefined setting fails loudly."""
        with self.assertRaises(KeyError):
            solver_setting("NOT_A_SETTING")


class ExceptionTests(SimpleTestCase):
    """Tests for solver exceptions."""

    def test_stability_error_suggests_step(self):
        """Test that StabilityError reports c_max and a step that would satisfy the limit."""
        error = StabilityError(100.0, 0.1, 0.5)
        self.assertAlmostEqual(error.suggested_dt, 0.005)
        self.assertIn("c_max=1.000000e+02", str(error))

    def test_admissibility_error_names_failures(self):
        """Test that AdmissibilityError lists the failed mandatory checks."""
        class Report:
            def failed_mandatory(self):
                return ["symmetric", "kernel_dominated"]

        error = AdmissibilityError(Report())
        self.assertIn("symmetric, kernel_dominated", str(error))


class StrictSerializerTests(SimpleTestCase):
    """Tests for StrictSerializer."""

    class Point(StrictSerializer):
        x = serializers.FloatField()

    def test_known_keys_accepted(self):
        """Test that declared fields validate normally."""
        serializer = self.Point(data={"x": 1.5})
        self.assertTrue(serializer.is_valid())
        self.assertEqual(serializer.validated_data["x"], 1.5)

    def test_unknown_keys_rejected(self):
        """Test that undeclared keys are reported by name."""
        serializer = self.Point(data={"x": 1.5, "y": 2.0})
        self.assertFalse(serializer.is_valid())
        self.assertIn("y", serializer.errors)
