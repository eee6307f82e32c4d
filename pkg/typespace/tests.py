"""
Unit tests for the typespace app.
Tests model builders, admissibility checks and model documents.
"""

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from .admissibility import check_admissible, check_subadditive
from .kernels import PhiFamily, build_constant_model, build_es_model, build_table_model
from .serializers import ModelDocumentSerializer


class EinsteinSmoluchowskiModelTests(SimpleTestCase):
    """Tests for the built-in Einstein-Smoluchowski model."""

    def test_kernel_at_unit_pair(self):
        """Test that K(1,1) = 4 for unit mass."""
        model = build_es_model(2, 1.0)
        self.assertEqual(model.kernel[0, 0], 4.0)

    def test_first_weight(self):
        """Test that w_1 = 2 for unit mass."""
        model = build_es_model(2, 1.0)
        self.assertAlmostEqual(model.weights[0], 2.0, places=14)

    def test_diagonal_kernel_is_four(self):
        """Test that K(i, i) = (2 m^-1/3)(2 m^1/3) = 4 on every class."""
        model = build_es_model(8, 1.0)
        np.testing.assert_allclose(np.diag(model.kernel), 4.0, rtol=1e-14)

    def test_kernel_first_and_eighth_class(self):
        """Test that K(1,8) = (1 + 1/2)(1 + 2) = 4.5."""
        model = build_es_model(8, 1.0)
        self.assertAlmostEqual(model.kernel[0, 7], 4.5, places=13)

    def test_table_covers_defect_classes(self):
        """Test that the kernel table is sized for 2M classes."""
        model = build_es_model(8, 1.0)
        self.assertEqual(model.kernel.shape, (16, 16))
        self.assertEqual(model.num_defect_classes, 16)

    def test_weights_at_least_one(self):
        """Test that y^-1/3 + y^1/3 >= 1 holds exhaustively."""
        model = build_es_model(512, 1.0)
        self.assertTrue(np.all(model.weights >= 1.0))

    def test_v_over_w_bound(self):
        """Test that v never exceeds w on the ES model."""
        model = build_es_model(16, 1.0)
        self.assertLessEqual(model.v_over_w_max, 1.0)

    def test_arrays_are_read_only(self):
        """Test that model tables cannot be written through."""
        model = build_es_model(4, 1.0)
        with self.assertRaises(ValueError):
            model.kernel[0, 0] = 1.0

    def test_rejects_bad_parameters(self):
        """Test that M = 0 and a negative mass unit are refused."""
        with self.assertRaises(ValidationError):
            build_es_model(0, 1.0)
        with self.assertRaises(ValidationError):
            build_es_model(4, -1.0)


class ConstantModelTests(SimpleTestCase):
    """Tests for the constant-kernel builder."""

    def test_zero_rate_is_pure_diffusion(self):
        """Test that rate 0 gives an all-zero kernel."""
        model = build_constant_model(4, 1.0, rate=0.0, a_const=1.0, dim=1)
        self.assertFalse(np.any(model.kernel))

    def test_constant_table(self):
        """Test that every kernel entry equals the rate."""
        model = build_constant_model(4, 1.0, rate=1.0, a_const=1.0, dim=1)
        self.assertEqual(model.kernel[1, 2], 1.0)

    def test_admissibility_passes_with_weights_at_least_one(self):
        """Test that the default constant model passes the gate with weights of at least one."""
        model = build_constant_model(4, 1.0, rate=1.0, a_const=1.0, dim=1)
        report = check_admissible(model)
        self.assertTrue(report.passed)
        self.assertTrue(np.all(model.weights >= 1.0))

    def test_large_rate_gets_dominating_weights(self):
        """Test that the phi floor scales with sqrt(rate)."""
        model = build_constant_model(6, 1.0, rate=25.0, a_const=0.5, dim=2)
        report = check_admissible(model)
        self.assertTrue(report.kernel_dominated)
        self.assertLessEqual(report.worst_domination_ratio, 1.0 + 1e-12)

    def test_negative_rate_rejected(self):
        """Test that a negative rate is refused."""
        with self.assertRaises(ValidationError):
            build_constant_model(4, 1.0, rate=-1.0)

    def test_truncation_keeps_prefix(self):
        """Test that truncating to M' keeps the leading 2M' rows of every table."""
        model = build_constant_model(8, 1.0, rate=1.0)
        small = model.truncated(4)
        self.assertEqual(small.num_classes, 4)
        self.assertEqual(small.kernel.shape, (8, 8))
        np.testing.assert_array_equal(small.weights, model.weights[:8])

    def test_truncation_out_of_range(self):
        """Test that truncating beyond M is refused."""
        model = build_constant_model(4, 1.0, rate=1.0)
        with self.assertRaises(ValidationError):
            model.truncated(5)


class PhiFamilyTests(SimpleTestCase):
    """Tests for PhiFamily."""

    def test_superlinear_power_rejected(self):
        """Test that a power above one is refused for the weight family."""
        with self.assertRaises(ValidationError):
            PhiFamily.power_sum((1.5,))

    def test_tabulated_only_at_class_masses(self):
        """Test that a tabulated family is defined only at the class masses."""
        phi = PhiFamily.tabulated([1.0, 2.0], [3.0, 4.0])
        np.testing.assert_array_equal(phi([2.0, 1.0]), [4.0, 3.0])
        with self.assertRaises(ValidationError):
            phi(1.5)


class AdmissibilityTests(SimpleTestCase):
    """Tests for check_admissible."""

    def test_es_model_all_flags_true(self):
        """Test that the ES model passes every check with no violations."""
        report = check_admissible(build_es_model(64, 1.0))
        self.assertTrue(report.symmetric)
        self.assertTrue(report.kernel_dominated)
        self.assertTrue(report.diffusivity_K_decreasing)
        self.assertTrue(report.phi_sublinear_sampled)
        self.assertTrue(report.vw_bound)
        self.assertTrue(report.avw_subadditive)
        self.assertTrue(report.global_existence)
        self.assertEqual(report.violations, [])

    def test_es_model_large_truncation(self):
        """Test that the ES model stays admissible up to M = 512."""
        report = check_admissible(build_es_model(512, 1.0))
        self.assertTrue(report.passed)
        self.assertTrue(report.global_existence)

    def test_es_worst_ratio_is_equality_at_unit_pair(self):
        """Test that ES domination is tight, K = w w' at the unit pair."""
        report = check_admissible(build_es_model(16, 1.0))
        self.assertAlmostEqual(report.worst_domination_ratio, 1.0, places=12)

    def test_increasing_diffusivity_witness(self):
        """Test that increasing diffusivities fail the gate and name the pair (1, 1)."""
        model = build_table_model(
            2, 1.0, 1, diffusivity=[1.0, 2.0, 3.0, 4.0], weights=[1.0] * 4, kernel=np.zeros((4, 4))
        )
        report = check_admissible(model)
        self.assertFalse(report.diffusivity_K_decreasing)
        self.assertFalse(report.passed)
        witness = report.witnesses("diffusivity_K_decreasing")[0]
        self.assertEqual((witness.i, witness.j), (1, 1))

    def test_constant_model_equality_case(self):
        """Test that the constant model meets K <= w w' with equality."""
        model = build_constant_model(4, 1.0, rate=1.0, a_const=1.0, dim=1)
        report = check_admissible(model)
        self.assertTrue(report.kernel_dominated)
        self.assertEqual(report.worst_domination_ratio, 1.0)

    def test_asymmetric_table_flagged(self):
        """Test that one asymmetric entry is flagged once."""
        kernel = np.ones((4, 4))
        kernel[0, 1] = 0.5
        model = build_table_model(2, 1.0, 1, diffusivity=[1.0], weights=[2.0] * 4, kernel=kernel)
        report = check_admissible(model)
        self.assertFalse(report.symmetric)
        self.assertEqual(len(report.witnesses("symmetric")), 1)

    def test_undominated_kernel_flagged(self):
        """Test that K = 2 with w = 1 fails domination with ratio 2."""
        model = build_table_model(2, 1.0, 1, diffusivity=[1.0], weights=[1.0] * 4, kernel=np.full((4, 4), 2.0))
        report = check_admissible(model)
        self.assertFalse(report.kernel_dominated)
        self.assertEqual(report.worst_domination_ratio, 2.0)
        self.assertIn("kernel_dominated", report.failed_mandatory())

    def test_every_false_flag_has_witness(self):
        """Test that each failing check carries at least one witness."""
        kernel = np.full((4, 4), 2.0)
        kernel[1, 0] = 3.0
        model = build_table_model(
            2, 1.0, 1, diffusivity=[1.0, 2.0, 3.0, 4.0], weights=[1.0] * 4, kernel=kernel, v_weights=[0.1] * 4
        )
        report = check_admissible(model)
        for name in ("symmetric", "kernel_dominated", "diffusivity_K_decreasing", "vw_bound"):
            self.assertFalse(getattr(report, name))
            self.assertTrue(report.witnesses(name), name)

    def test_report_serializes(self):
        """Test the JSON form of a passing report."""
        document = check_admissible(build_es_model(4, 1.0)).to_dict()
        self.assertTrue(document["passed"])
        self.assertEqual(document["violations"], [])


class SubadditivityTests(SimpleTestCase):
    """Tests for check_subadditive."""

    def test_mass_is_subadditive(self):
        """Test that the mass itself is subadditive."""
        self.assertTrue(check_subadditive(np.arange(1, 17, dtype=float), 8).ok)

    def test_square_fails_at_unit_pair(self):
        """Test that m^2 fails subadditivity first at (1, 1)."""
        masses = np.arange(1, 9, dtype=float)
        result = check_subadditive(masses**2, 4)
        self.assertFalse(result.ok)
        self.assertEqual(result.witness, (1, 1))

    def test_es_weights_subadditive(self):
        """Test that the ES weights are subadditive."""
        model = build_es_model(64, 1.0)
        self.assertTrue(check_subadditive(model.weights, 64))

    def test_sum_of_subadditive_is_subadditive(self):
        """Test closure under addition on random concave increasing pairs."""
        rng = np.random.default_rng(7)
        masses = np.arange(1, 33, dtype=float)
        for _ in range(20):
            p, q = rng.uniform(0.0, 1.0, size=2)
            f = rng.uniform(0.1, 2.0) * masses**p
            g = rng.uniform(0.1, 2.0) * masses**q
            self.assertTrue(check_subadditive(f, 16))
            self.assertTrue(check_subadditive(g, 16))
            self.assertTrue(check_subadditive(f + g, 16))

    def test_short_vector_rejected(self):
        """Test that values too short for the requested range are refused."""
        with self.assertRaises(ValueError):
            check_subadditive(np.ones(5), 4)


class ModelDocumentTests(SimpleTestCase):
    """Tests for model documents."""

    def test_es_document_builds_model(self):
        """Test that an ES document builds the ES model."""
        serializer = ModelDocumentSerializer(data={"dim": 3, "num_classes": 4, "kernel": {"type": "es"}})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        model = serializer.save()
        self.assertEqual(model.kernel_type, "es")
        self.assertEqual(model.kernel[0, 0], 4.0)

    def test_es_needs_three_dimensions(self):
        """Test that an ES document in 1D is a dim error."""
        serializer = ModelDocumentSerializer(data={"dim": 1, "num_classes": 4, "kernel": {"type": "es"}})
        self.assertFalse(serializer.is_valid())
        self.assertIn("dim", serializer.errors)

    def test_unknown_keys_rejected(self):
        """Test that unknown top-level keys are reported."""
        serializer = ModelDocumentSerializer(
            data={"dim": 3, "num_classes": 4, "kernel": {"type": "es"}, "fragmentation": True}
        )
        self.assertFalse(serializer.is_valid())
        self.assertIn("fragmentation", serializer.errors)

    def test_unknown_kernel_keys_rejected(self):
        """Test that unknown kernel keys are reported under kernel."""
        serializer = ModelDocumentSerializer(data={"dim": 3, "num_classes": 4, "kernel": {"type": "es", "shape": 1}})
        self.assertFalse(serializer.is_valid())
        self.assertIn("kernel", serializer.errors)

    def test_table_requires_weights(self):
        """Test that a table kernel without weights is an error on weights."""
        serializer = ModelDocumentSerializer(
            data={"dim": 1, "num_classes": 1, "diffusivity": [1.0], "kernel": {"type": "table", "table": [[0, 0], [0, 0]]}}
        )
        self.assertFalse(serializer.is_valid())
        self.assertIn("weights", serializer.errors)

    def test_table_shape_checked(self):
        """Test that a table smaller than 2M x 2M is refused."""
        serializer = ModelDocumentSerializer(
            data={
                "dim": 1,
                "num_classes": 2,
                "diffusivity": [1.0],
                "weights": [1.0, 1.0, 1.0, 1.0],
                "kernel": {"type": "table", "table": [[0.0, 0.0], [0.0, 0.0]]},
            }
        )
        self.assertFalse(serializer.is_valid())

    def test_ragged_table_rejected(self):
        """Test that a kernel table with rows of different lengths is a validation error, not a crash."""
        serializer = ModelDocumentSerializer(
            data={
                "dim": 1,
                "num_classes": 2,
                "diffusivity": [1.0],
                "weights": [1.0, 1.0, 1.0, 1.0],
                "kernel": {"type": "table", "table": [[0.0, 0.0, 0.0, 0.0], [0.0, 0.0], [0.0] * 4, [0.0] * 4]},
            }
        )
        self.assertFalse(serializer.is_valid())
        self.assertIn("table", serializer.errors["kernel"])

    def test_constant_document_with_mismatched_weights(self):
        """Test that weights disagreeing with the derived constant-model weights are refused."""
        serializer = ModelDocumentSerializer(
            data={"dim": 1, "num_classes": 2, "weights": [5.0, 5.0, 5.0, 5.0], "kernel": {"type": "constant", "rate": 1.0}}
        )
        self.assertFalse(serializer.is_valid())
        self.assertIn("weights", serializer.errors)

    def test_document_reproduces_model(self):
        """Test that a model rebuilt from its own document has identical tables."""
        for model in (
            build_es_model(4, 0.5),
            build_constant_model(3, 1.0, rate=2.0, a_const=0.25, dim=2),
            build_table_model(2, 1.0, 1, diffusivity=[1.0], weights=[2.0] * 4, kernel=np.ones((4, 4))),
        ):
            document = ModelDocumentSerializer(model).data
            serializer = ModelDocumentSerializer(data=document)
            self.assertTrue(serializer.is_valid(), serializer.errors)
            rebuilt = serializer.save()
            np.testing.assert_array_equal(rebuilt.kernel, model.kernel)
            np.testing.assert_array_equal(rebuilt.weights, model.weights)
            np.testing.assert_array_equal(rebuilt.diffusivity, model.diffusivity)
