"""
Unit tests for the coagulation app.
"""

import numpy as np
from django.test import SimpleTestCase

from typespace.kernels import build_constant_model, build_es_model

from .fluxes import c_field, gain, loss, truncated_flux


def brute_force_gain(kappa, model):
    m = model.num_classes
    out = np.zeros((2 * m, kappa.shape[1]))
    for i in range(m):
        for j in range(m):
            out[i + j + 1] += 0.5 * model.kernel[i, j] * kappa[i] * kappa[j]
    return out


class GainLossTests(SimpleTestCase):
    """Tests for gain and loss."""

    def test_single_class_pairs_with_itself(self):
        """Test that a lone class 2 only feeds class 4, with the 1/2 for identical pairs."""
        model = build_es_model(4)
        kappa = np.zeros((4, 1))
        kappa[1] = 0.5
        g = gain(kappa, model, cell=0)
        expected = np.zeros(8)
        expected[3] = 0.5 * model.kernel[1, 1] * 0.25
        np.testing.assert_array_equal(g, expected)

    def test_constant_kernel_hand_enumeration(self):
        """Test gain for K = 1 against a hand count of the pairs reaching classes 2 to 4."""
        model = build_constant_model(4, rate=1.0)
        kappa = np.zeros((4, 1))
        kappa[0], kappa[1] = 2.0, 3.0
        g = gain(kappa, model, cell=0)
        self.assertEqual(g[1], 2.0)
        self.assertEqual(g[2], 6.0)
        self.assertEqual(g[3], 4.5)
        self.assertEqual(g[0], 0.0)

    def test_es_unit_pair(self):
        """Test that two unit-mass particles under ES give a class-2 gain of K(1,1)/2 = 2."""
        model = build_es_model(2)
        kappa = np.array([[1.0], [0.0]])
        self.assertEqual(gain(kappa, model, cell=0)[1], 2.0)

    def test_matches_brute_force_exactly(self):
        """Test that the vectorised gain equals the double loop bit for bit."""
        rng = np.random.default_rng(8)
        model = build_es_model(12)
        kappa = rng.uniform(size=(12, 5))
        np.testing.assert_array_equal(gain(kappa, model), brute_force_gain(kappa, model))

    def test_loss_empty(self):
        model = build_es_model(4)
        np.testing.assert_array_equal(loss(np.zeros((4, 3)), model), 0.0)

    def test_loss_counts_ordered_pairs(self):
        """Test that loss = 2 gain in a monodisperse state."""
        model = build_constant_model(4, rate=1.0)
        kappa = np.zeros((4, 1))
        kappa[0] = 2.0
        self.assertEqual(loss(kappa, model, cell=0)[0], 4.0)
        self.assertEqual(gain(kappa, model, cell=0)[1], 2.0)

    def test_es_loss_two_classes(self):
        model = build_es_model(8)
        kappa = np.zeros((8, 1))
        kappa[[0, 7]] = 1.0
        self.assertAlmostEqual(loss(kappa, model, cell=0)[0], 8.5, places=12)


class TruncatedFluxTests(SimpleTestCase):
    """Tests for truncated_flux and c_field."""

    def test_inactive_truncation(self):
        """Test that nothing reaches the defects while products stay inside the live range."""
        model = build_es_model(8)
        rng = np.random.default_rng(9)
        kappa = np.zeros((8, 3))
        kappa[:4] = rng.uniform(size=(4, 3))
        flux = truncated_flux(kappa, np.zeros((16, 3)), model)
        np.testing.assert_array_equal(flux.dlambda, 0.0)
        np.testing.assert_array_equal(flux.dkappa, gain(kappa, model)[:8] - loss(kappa, model))

    def test_single_live_class_overflows(self):
        """Test that with M = 1 every collision overflows into class 2 of the defects and mass is kept."""
        model = build_es_model(1)
        flux = truncated_flux(np.array([[1.0]]), np.zeros((2, 1)), model)
        self.assertEqual(flux.dkappa[0, 0], -4.0)
        self.assertEqual(flux.dlambda[1, 0], 2.0)
        self.assertEqual(flux.mass_rate(model.masses)[0], 0.0)

    def test_conversion_keeps_class(self):
        """Test that collisions with defects move live particles into the defects of the same class."""
        model = build_constant_model(2, rate=0.0)
        lam = np.zeros((4, 1))
        lam[2] = 1.0
        kappa = np.array([[1.0], [0.0]])
        flux = truncated_flux(kappa, lam, model)
        eta = model.weights[2]
        self.assertEqual(flux.dkappa[0, 0], -model.weights[0] * eta)
        self.assertEqual(flux.dlambda[0, 0], model.weights[0] * eta)

    def test_mass_balance(self):
        """Test that the truncated flux conserves total mass across live and defect classes."""
        rng = np.random.default_rng(10)
        model = build_es_model(16)
        kappa = rng.uniform(size=(16, 7))
        lam = rng.uniform(size=(32, 7))
        flux = truncated_flux(kappa, lam, model)
        gross = model.masses[:16] @ np.abs(flux.dkappa) + model.masses @ np.abs(flux.dlambda)
        self.assertTrue(np.all(np.abs(flux.mass_rate(model.masses)) <= 1e-12 * gross))

    def test_particle_count_decreases(self):
        """Test that the total particle count never increases."""
        rng = np.random.default_rng(12)
        model = build_constant_model(8, rate=2.0)
        kappa = rng.uniform(size=(8, 4))
        lam = rng.uniform(size=(16, 4))
        flux = truncated_flux(kappa, lam, model)
        scale = np.abs(flux.dkappa).sum(axis=0) + np.abs(flux.dlambda).sum(axis=0)
        self.assertTrue(np.all(flux.number_rate() <= 1e-12 * scale))

    def test_weight_moment_dissipates_without_defects(self):
        """Test that <w, kappa> + eta cannot increase when there are no defects."""
        rng = np.random.default_rng(13)
        model = build_es_model(16)
        kappa = rng.uniform(size=(16, 4))
        flux = truncated_flux(kappa, np.zeros((32, 4)), model)
        w = model.weights
        rate = w[:16] @ flux.dkappa + w @ flux.dlambda
        scale = w[:16] @ np.abs(flux.dkappa) + w @ np.abs(flux.dlambda)
        self.assertTrue(np.all(rate <= 1e-12 * scale))

    def test_c_field(self):
        """Test the loss-rate field on an empty state and on unit monodisperse ES data."""
        model = build_es_model(2)
        np.testing.assert_array_equal(c_field(np.zeros((2, 3)), np.zeros((4, 3)), model), 0.0)
        kappa = np.zeros((2, 1))
        kappa[0] = 1.0
        self.assertEqual(c_field(kappa, np.zeros((4, 1)), model)[0, 0], 4.0)

    def test_c_field_from_defects_only(self):
        model = build_es_model(2)
        lam = np.zeros((4, 1))
        lam[0] = 1.5
        field = c_field(np.zeros((2, 1)), lam, model)
        np.testing.assert_allclose(field[:, 0], 1.5 * model.weights[0] * model.weights[:2], rtol=1e-15)

    def test_loss_rate_consistency(self):
        """Test that dkappa = gain - c * kappa on the live range."""
        rng = np.random.default_rng(14)
        model = build_es_model(6)
        kappa = rng.uniform(size=(6, 3))
        lam = rng.uniform(size=(12, 3))
        flux = truncated_flux(kappa, lam, model)
        expected = gain(kappa, model)[:6] - c_field(kappa, lam, model) * kappa
        np.testing.assert_allclose(flux.dkappa, expected, rtol=1e-12, atol=1e-12)
