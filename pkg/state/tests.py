"""
Unit tests for the state app.
"""

import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from typespace.kernels import build_constant_model, build_es_model

from .measures import (
    DefectState,
    SpatialGrid,
    StateMeasure,
    alpha_and_horizon,
    bracket,
    dominating_measure,
    moment_summary,
    norm_inf,
    norm_l1,
    total_mass,
)
from .snapshots import load_snapshot, write_snapshots


class SpatialGridTests(SimpleTestCase):
    """Tests for SpatialGrid."""

    def test_spacing_and_cells(self):
        """Test that spacing, cell count and cell volume follow from dim, N and L."""
        grid = SpatialGrid(2, 4, 2.0)
        self.assertEqual(grid.spacing, 0.5)
        self.assertEqual(grid.num_cells, 16)
        self.assertEqual(grid.cell_volume, 0.25)

    def test_invalid_grids(self):
        """Test that unsupported dimensions, empty axes and zero lengths are rejected."""
        with self.assertRaises(ValidationError):
            SpatialGrid(4, 4, 1.0)
        with self.assertRaises(ValidationError):
            SpatialGrid(1, 0, 1.0)
        with self.assertRaises(ValidationError):
            SpatialGrid(1, 4, 0.0)


class BracketTests(SimpleTestCase):
    """Tests for bracket, norms and total mass."""

    def setUp(self):
        self.grid = SpatialGrid(1, 4, 1.0)

    def test_zero_function(self):
        """Test that pairing with the zero function gives zero in every cell."""
        density = np.ones((3, 4))
        np.testing.assert_array_equal(bracket(np.zeros(3), density), np.zeros(4))

    def test_single_class(self):
        """Test the bracket for a single class."""
        density = np.zeros((1, 4))
        density[0, 2] = 3.0
        self.assertEqual(bracket([2.0], density)[2], 6.0)

    def test_es_weights(self):
        """Test that <w, kappa> = w_1 + w_8 = 4.5 with unit densities in classes 1 and 8."""
        model = build_es_model(8, 1.0)
        density = np.zeros((8, 4))
        density[[0, 7], 1] = 1.0
        self.assertAlmostEqual(bracket(model.weights[:8], density)[1], 4.5, places=13)

    def test_length_mismatch(self):
        """Test that a function of the wrong length is rejected."""
        with self.assertRaises(ValidationError):
            bracket(np.ones(2), np.ones((3, 4)))

    def test_linearity(self):
        """Test that the bracket is linear in the function."""
        rng = np.random.default_rng(3)
        density = rng.uniform(size=(5, 4))
        f, g = rng.uniform(size=5), rng.uniform(size=5)
        np.testing.assert_allclose(bracket(f + g, density), bracket(f, density) + bracket(g, density), rtol=1e-12)

    def test_norms(self):
        """Test the L1 and sup norms on constant and indicator fields."""
        self.assertEqual(norm_l1(np.zeros(4), self.grid), 0.0)
        self.assertEqual(norm_l1(np.full(4, 2.0), self.grid), 2.0)
        self.assertEqual(norm_inf(np.full(4, 2.0)), 2.0)
        indicator = np.zeros(4)
        indicator[1] = 1.0
        self.assertEqual(norm_l1(indicator, self.grid), 0.25)

    def test_total_mass(self):
        """Test total mass for empty, single-cell and monodisperse states."""
        self.assertEqual(total_mass(StateMeasure(self.grid, np.zeros((3, 4)))), 0.0)
        single = np.zeros((2, 4))
        single[0, 0] = 1.0
        self.assertEqual(total_mass(StateMeasure(self.grid, single)), 0.25)
        monodisperse = np.zeros((2, 4))
        monodisperse[0] = 1.5
        self.assertAlmostEqual(total_mass(StateMeasure(self.grid, monodisperse, mass_unit=2.0)), 3.0)

    def test_mass_is_l1_of_mass_bracket(self):
        """Test that total mass equals the L1 norm of <m, kappa>."""
        rng = np.random.default_rng(5)
        state = StateMeasure(self.grid, rng.uniform(size=(6, 4)), mass_unit=0.5)
        self.assertAlmostEqual(norm_l1(bracket(state.masses, state), self.grid), total_mass(state), places=12)

    def test_negative_density_rejected(self):
        """Test that a StateMeasure refuses negative densities."""
        with self.assertRaises(ValidationError):
            StateMeasure(self.grid, -np.ones((2, 4)))


class DefectStateTests(SimpleTestCase):
    """Tests for DefectState."""

    def test_eta_tracks_density(self):
        """Test that with_density recomputes eta and leaves the original state untouched."""
        grid = SpatialGrid(1, 3, 1.0)
        weights = np.array([1.0, 2.0, 3.0, 4.0])
        state = DefectState(grid, np.zeros((4, 3)), weights)
        np.testing.assert_array_equal(state.eta, np.zeros(3))
        density = np.zeros((4, 3))
        density[3, 1] = 2.0
        updated = state.with_density(density)
        np.testing.assert_allclose(updated.eta, [0.0, 8.0, 0.0], rtol=1e-12)
        np.testing.assert_array_equal(state.eta, np.zeros(3))


class HorizonTests(SimpleTestCase):
    """Tests for dominating measures and alpha."""

    def test_constant_profile(self):
        """Test that a constant profile is its own dominating measure."""
        density = np.tile(np.array([[1.0], [2.0]]), (1, 5))
        np.testing.assert_array_equal(dominating_measure(density).values, [1.0, 2.0])

    def test_bumps(self):
        """Test that the dominating measure takes the per-class maximum over cells."""
        density = np.zeros((1, 6))
        density[0, 1] = 1.0
        density[0, 4] = 3.0
        star = dominating_measure(density)
        self.assertEqual(star.values[0], 3.0)
        self.assertTrue(np.all(density <= star.values[:, None]))

    def test_empty_is_infinite(self):
        """Test that empty data gives alpha = 0 and an infinite horizon written as null."""
        horizon = alpha_and_horizon(build_es_model(4), np.zeros(4))
        self.assertEqual(horizon.alpha, 0.0)
        self.assertEqual(horizon.zeta_lower, np.inf)
        self.assertIsNone(horizon.to_dict()["zeta_lower"])

    def test_es_monodisperse(self):
        """Test alpha = 4 and zeta = 0.25 for unit monodisperse data under the ES model."""
        star = np.zeros(4)
        star[0] = 1.0
        horizon = alpha_and_horizon(build_es_model(4), star)
        self.assertAlmostEqual(horizon.alpha, 4.0, delta=1e-12)
        self.assertAlmostEqual(horizon.zeta_lower, 0.25, delta=1e-12)

    def test_es_two_classes(self):
        """Test alpha for unit densities in classes 1 and 8."""
        star = np.zeros(8)
        star[[0, 7]] = 1.0
        horizon = alpha_and_horizon(build_es_model(8), star)
        self.assertAlmostEqual(horizon.alpha, 10.25, places=12)

    def test_monotone_in_dominating_measure(self):
        """Test that alpha grows with the dominating measure."""
        rng = np.random.default_rng(11)
        model = build_es_model(8)
        for _ in range(10):
            low = rng.uniform(size=16)
            high = low + rng.uniform(size=16)
            self.assertLessEqual(alpha_and_horizon(model, low).alpha, alpha_and_horizon(model, high).alpha)

    def test_moment_summary_es(self):
        """Test the moment summary of ES data, which is conservative with global existence."""
        grid = SpatialGrid(1, 4, 1.0)
        model = build_es_model(4)
        density = np.zeros((8, 4))
        density[0] = 1.0
        summary = moment_summary(model, density, grid)
        self.assertAlmostEqual(summary.w_l1, 2.0)
        self.assertAlmostEqual(summary.alpha, 4.0)
        self.assertTrue(summary.conservative)
        self.assertTrue(summary.global_existence)

    def test_moment_summary_without_v(self):
        """Test that global existence is not claimed without v weights."""
        grid = SpatialGrid(1, 2, 1.0)
        model = build_constant_model(4)
        summary = moment_summary(model, np.ones((8, 2)), grid)
        self.assertFalse(summary.global_existence)


class SnapshotTests(SimpleTestCase):
    """Tests for snapshot CSV files."""

    def test_written_snapshot_loads_back(self):
        """Test that the first snapshot written loads back exactly."""
        grid = SpatialGrid(2, 3, 1.0)
        density = np.zeros((2, 9))
        density[1, 4] = 0.125
        density[0, 8] = 2.5
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "snapshots.csv"
            rows = write_snapshots(path, [(0.0, density), (1.0, 2 * density)], grid)
            self.assertEqual(rows, 4)
            loaded = load_snapshot(path, grid, 2)
        np.testing.assert_array_equal(loaded, density)

    def test_class_out_of_range(self):
        """Test that a snapshot naming a class beyond the model is rejected."""
        grid = SpatialGrid(1, 2, 1.0)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.csv"
            path.write_text("time,class,cell_0,density\n0,5,0,1.0\n")
            with self.assertRaises(ValidationError):
                load_snapshot(path, grid, 2)
