"""
Unit tests for the heatflow app.
Tests table construction, diffusion and propagators with potential.
"""

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from state.measures import SpatialGrid

from .propagators import (
    build_propagator,
    diffuse,
    profile_variance,
    propagate_with_potential,
    propagate_with_potential_trapezoid,
    wrapped_gaussian_profile,
)


def smooth_profile(grid, classes=1):
    x = grid.centers()
    base = 1.0 + 0.5 * np.cos(2 * np.pi * x / grid.length) + 0.25 * np.sin(4 * np.pi * x / grid.length)
    return np.tile(base, (classes, 1))


class PropagatorTableTests(SimpleTestCase):
    """Tests for build_propagator."""

    def setUp(self):
        self.grid = SpatialGrid(1, 32, 1.0)

    def test_rows_and_columns_sum_to_one(self):
        """Test that every transition factor is non-negative and doubly stochastic."""
        table = build_propagator(self.grid, [1.0, 0.3], 0.01)
        for factor in table.factors:
            np.testing.assert_allclose(factor.sum(axis=0), 1.0, rtol=0, atol=1e-14)
            np.testing.assert_allclose(factor.sum(axis=1), 1.0, rtol=0, atol=1e-14)
            self.assertTrue(np.all(factor >= 0))

    def test_circulant_and_symmetric(self):
        """Test that the transition factor is symmetric and constant along diagonals."""
        factor = build_propagator(self.grid, [1.0], 0.01).factors[0]
        np.testing.assert_array_equal(factor, factor.T)
        np.testing.assert_array_equal(factor[1:, 1:], factor[:-1, :-1])

    def test_frozen_limit_is_identity(self):
        """Test that sqrt(a dt) << dx leaves off-diagonal mass below 1e-6."""
        factor = build_propagator(self.grid, [1.0], 1e-6).factors[0]
        off_diagonal = factor - np.diag(np.diag(factor))
        self.assertLess(off_diagonal.sum(axis=0).max(), 1e-6)

    def test_constant_field_is_fixed_point(self):
        """Test that diffusion leaves a constant field unchanged."""
        table = build_propagator(self.grid, [1.0], 0.01)
        np.testing.assert_allclose(diffuse(np.ones((1, 32)), table), 1.0, rtol=0, atol=1e-14)

    def test_single_bump_variance(self):
        """Test that a bump spreads to variance a dt within 2% for dx <= sqrt(a dt)/4."""
        grid = SpatialGrid(1, 80, 2.0)
        table = build_propagator(grid, [1.0], 0.01)
        bump = np.zeros((1, 80))
        bump[0, 40] = 1.0
        spread = diffuse(bump, table)[0]
        variance = profile_variance(spread, grid, center=grid.centers()[40])[0]
        self.assertAlmostEqual(variance / 0.01, 1.0, delta=0.02)

    def test_faster_class_spreads_more(self):
        """Test that the class with the larger diffusivity spreads further in the same step."""
        grid = SpatialGrid(1, 64, 2.0)
        table = build_propagator(grid, [1.0, 0.5, 0.25], 0.01)
        bump = np.zeros((3, 64))
        bump[:, 32] = 1.0
        spread = diffuse(bump, table)
        center = grid.centers()[32]
        variances = [profile_variance(row, grid, center=center)[0] for row in spread]
        self.assertGreater(variances[0], variances[1])
        self.assertGreater(variances[1], variances[2])

    def test_wrap_degeneracy_rejected(self):
        """Test that a step whose spread covers the whole torus is refused."""
        with self.assertRaises(ValidationError):
            build_propagator(self.grid, [1.0], 0.3)

    def test_non_positive_step_rejected(self):
        """Test that a zero step is refused."""
        with self.assertRaises(ValidationError):
            build_propagator(self.grid, [1.0], 0.0)


class DiffuseTests(SimpleTestCase):
    """Tests for diffuse."""

    def setUp(self):
        self.grid = SpatialGrid(1, 40, 2.0)

    def test_zero_state(self):
        """Test that diffusing zero gives zero."""
        table = build_propagator(self.grid, [1.0, 2.0], 0.01)
        np.testing.assert_array_equal(diffuse(np.zeros((2, 40)), table), 0.0)

    def test_mass_preserved_per_class(self):
        """Test that each class keeps its mass and stays non-negative."""
        rng = np.random.default_rng(1)
        density = rng.uniform(size=(3, 40))
        table = build_propagator(self.grid, [1.0, 0.5, 0.2], 0.01)
        out = diffuse(density, table)
        np.testing.assert_allclose(out.sum(axis=1), density.sum(axis=1), rtol=1e-12)
        self.assertTrue(np.all(out >= 0))

    def test_chapman_kolmogorov(self):
        """Test that two half steps equal one full step on the torus."""
        density = smooth_profile(self.grid, 2)
        density[1, 5] += 3.0
        half = build_propagator(self.grid, [1.0, 1.0], 0.01)
        full = build_propagator(self.grid, [1.0, 1.0], 0.02)
        np.testing.assert_allclose(diffuse(diffuse(density, half), half), diffuse(density, full), rtol=0, atol=1e-10)

    def test_comparison_principle(self):
        """Test that diffusion preserves pointwise order."""
        rng = np.random.default_rng(2)
        low = rng.uniform(size=(1, 40))
        high = low + rng.uniform(0.1, 1.0, size=(1, 40))
        table = build_propagator(self.grid, [1.0], 0.01)
        self.assertTrue(np.all(diffuse(low, table) <= diffuse(high, table)))

    def test_separable_matches_full_matrix_in_two_dimensions(self):
        """Test that axis-by-axis application agrees with the full 2D transition matrix."""
        grid = SpatialGrid(2, 6, 1.0)
        rng = np.random.default_rng(4)
        density = rng.uniform(size=(2, 36))
        table = build_propagator(grid, [0.5, 1.0], 0.004)
        out = diffuse(density, table)
        for i in range(2):
            np.testing.assert_allclose(out[i], table.matrix(i) @ density[i], rtol=1e-13, atol=1e-15)

    def test_single_cell_is_identity(self):
        """Test that a one-cell grid is left alone."""
        grid = SpatialGrid(1, 1, 10.0)
        density = np.array([[2.0], [3.0]])
        np.testing.assert_array_equal(diffuse(density, build_propagator(grid, [1.0, 1.0], 0.1)), density)

    def test_shape_mismatch(self):
        """Test that a density with the wrong cell or class count is rejected."""
        table = build_propagator(self.grid, [1.0], 0.01)
        with self.assertRaises(ValidationError):
            diffuse(np.ones((1, 39)), table)
        with self.assertRaises(ValidationError):
            diffuse(np.ones((2, 40)), table)


class PotentialTests(SimpleTestCase):
    """Tests for the killed propagators."""

    def setUp(self):
        self.grid = SpatialGrid(1, 32, 1.0)
        self.density = smooth_profile(self.grid)
        self.table = build_propagator(self.grid, [1.0], 0.01)

    def test_zero_rate_is_diffusion(self):
        """Test that a zero killing rate reduces to plain diffusion."""
        out = propagate_with_potential(self.density, np.zeros_like(self.density), self.table, 0.01)
        np.testing.assert_array_equal(out, diffuse(self.density, self.table))

    def test_constant_rate_factors_out(self):
        """Test that a constant rate gives diffusion times exp(-c dt)."""
        rate = np.full_like(self.density, 3.0)
        out = propagate_with_potential(self.density, rate, self.table, 0.01)
        np.testing.assert_allclose(out, diffuse(self.density, self.table) * np.exp(-0.03), rtol=1e-13)

    def test_monotone_below_diffusion(self):
        """Test that killing keeps the result between zero and plain diffusion."""
        rate = 2.0 + np.cos(2 * np.pi * self.grid.centers())[None, :]
        out = propagate_with_potential(self.density, rate, self.table, 0.01)
        self.assertTrue(np.all(out <= diffuse(self.density, self.table)))
        self.assertTrue(np.all(out >= 0))

    def test_negative_rate_rejected(self):
        """Test that a negative killing rate is refused."""
        with self.assertRaises(ValidationError):
            propagate_with_potential(self.density, -np.ones_like(self.density), self.table, 0.01)

    def test_second_order_in_time(self):
        """Test that halving the step twice shows observed order >= 1.9."""
        x = self.grid.centers()
        rate = 1.0 + 0.5 * np.cos(2 * np.pi * x)[None, :]
        initial = (1.0 + 0.5 * np.cos(2 * np.pi * x))[None, :]
        horizon = 0.1
        results = []
        for steps in (4, 8, 16):
            dt = horizon / steps
            table = build_propagator(self.grid, [0.5], dt)
            state = initial
            for _ in range(steps):
                state = propagate_with_potential(state, rate, table, dt)
            results.append(state)
        coarse = np.abs(results[0] - results[1]).sum()
        fine = np.abs(results[1] - results[2]).sum()
        self.assertGreaterEqual(np.log2(coarse / fine), 1.9)

    def test_trapezoid_without_rate_is_diffusion(self):
        """Test that the trapezoidal form with zero rates is plain diffusion."""
        zero = np.zeros_like(self.density)
        out = propagate_with_potential_trapezoid(self.density, zero, zero, self.table, 0.01)
        np.testing.assert_array_equal(out, diffuse(self.density, self.table))

    def test_trapezoid_positivity_guard(self):
        """Test that the trapezoidal form refuses rates that would make the explicit half negative."""
        rate = np.full_like(self.density, 300.0)
        with self.assertRaises(ValidationError):
            propagate_with_potential_trapezoid(self.density, rate, rate, self.table, 0.01)


class ProfileTests(SimpleTestCase):
    """Tests for wrapped Gaussian profiles."""

    def test_profile_integrates_to_amount(self):
        """Test that the wrapped Gaussian carries the requested amount."""
        grid = SpatialGrid(1, 64, 2.0)
        profile = wrapped_gaussian_profile(grid, 0.01, amount=3.0)
        self.assertAlmostEqual(profile.sum() * grid.cell_volume, 3.0, places=10)

    def test_profile_variance(self):
        """Test that the wrapped Gaussian has the requested variance about its center."""
        grid = SpatialGrid(1, 128, 2.0)
        profile = wrapped_gaussian_profile(grid, 0.05, center=1.0)
        self.assertAlmostEqual(profile_variance(profile, grid, center=1.0)[0], 0.05, delta=1e-3)

    def test_two_dimensional_profile(self):
        grid = SpatialGrid(2, 32, 2.0)
        profile = wrapped_gaussian_profile(grid, 0.02)
        self.assertAlmostEqual(profile.sum() * grid.cell_volume, 1.0, places=8)
        np.testing.assert_allclose(profile_variance(profile, grid, center=1.0), 0.02, rtol=1e-3)
