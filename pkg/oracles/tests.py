"""
Unit tests for the oracles app.
"""

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from heatflow.propagators import profile_variance
from solver.runs import run
from solver.scenarios import InitialCondition, Scenario
from state.measures import SpatialGrid
from typespace.kernels import build_constant_model, build_es_model

from .references import (
    Reference,
    compare,
    constant_kernel_closed_form,
    diffusion_reference,
    homogeneous_ode,
    variance_errors,
)

MONODISPERSE = InitialCondition("monodisperse", {"mass_class": 1, "density": 1.0})


class HomogeneousOdeTests(SimpleTestCase):
    """Tests for homogeneous_ode."""

    def test_zero_kernel_keeps_data(self):
        """Test that with K = 0 the reference never moves and is labelled ode-rk4."""
        model = build_constant_model(4, rate=0.0)
        reference = homogeneous_ode(model, [1.0, 0.5, 0.0, 0.25], t_end=1.0, dt_ref=0.1)
        np.testing.assert_array_equal(reference.values[-1, :4, 0], [1.0, 0.5, 0.0, 0.25])
        self.assertEqual(reference.provenance, "ode-rk4")

    def test_matches_constant_kernel_closed_form(self):
        """Test that RK4 agrees with the K = 1 closed form on the classes it tracks."""
        model = build_constant_model(32)
        reference = homogeneous_ode(model, [1.0], t_end=2.0, dt_ref=1e-3, times=[0.0, 1.0, 2.0])
        exact = constant_kernel_closed_form([0.0, 1.0, 2.0], 16)
        self.assertAlmostEqual(reference.at(2.0)[0, 0], 0.25, delta=1e-8)
        np.testing.assert_allclose(reference.values[:, :16], exact.values, atol=1e-8)

    def test_es_conserves_mass(self):
        """Test that the ES reference keeps its mass across live and defect classes."""
        model = build_es_model(64)
        reference = homogeneous_ode(model, [1.0], t_end=1.0, dt_ref=1e-3)
        mass = model.masses @ reference.values[-1, :, 0]
        self.assertAlmostEqual(mass, 1.0, delta=1e-9)

    def test_times_must_hit_steps(self):
        """Test that requested times and t_end must be whole multiples of the reference step."""
        model = build_constant_model(2)
        with self.assertRaises(ValidationError):
            homogeneous_ode(model, [1.0], t_end=1.0, dt_ref=0.1, times=[0.55])
        with self.assertRaises(ValidationError):
            homogeneous_ode(model, [1.0], t_end=1.05, dt_ref=0.1)

    def test_missing_time_lookup(self):
        """Test that looking up a time the reference never stored is an error."""
        reference = constant_kernel_closed_form([0.0, 1.0], 2)
        with self.assertRaises(ValidationError):
            reference.at(0.5)


class ConstantKernelClosedFormTests(SimpleTestCase):
    """Tests for constant_kernel_closed_form."""

    def test_initial_values(self):
        """Test that the closed form starts from unit monodisperse data."""
        reference = constant_kernel_closed_form([0.0], 3)
        np.testing.assert_array_equal(reference.values[0, :, 0], [1.0, 0.0, 0.0])

    def test_total_number(self):
        """Test that the total number follows 1 / (1 + t/2)."""
        reference = constant_kernel_closed_form([2.0], 400)
        self.assertAlmostEqual(reference.values[0, :, 0].sum(), 0.5, delta=1e-12)


class DiffusionReferenceTests(SimpleTestCase):
    """Tests for diffusion_reference."""

    def setUp(self):
        self.grid = SpatialGrid(1, 200, 4.0)

    def test_initial_profile(self):
        """Test that the analytic Gaussian starts with unit mass."""
        reference = diffusion_reference(self.grid, 1.0, 0.01, [0.0])
        self.assertAlmostEqual(reference.values[0].sum() * self.grid.cell_volume, 1.0, delta=1e-12)

    def test_variance_grows_linearly(self):
        """Test that the variance grows by a t for pure diffusion."""
        reference = diffusion_reference(self.grid, 1.0, 0.01, [0.0, 0.04])
        variance = profile_variance(reference.values[1, 0], self.grid, center=[2.0])
        self.assertAlmostEqual(variance[0], 0.05, delta=1e-6)

    def test_semigroup(self):
        """Test that starting later from a wider Gaussian lands on the same profile."""
        first = diffusion_reference(self.grid, 1.0, 0.01, [0.03])
        second = diffusion_reference(self.grid, 1.0, 0.02, [0.02])
        np.testing.assert_allclose(first.values, second.values, atol=1e-12)

    def test_wide_profile_rejected(self):
        """Test that profiles too wide for the torus are refused."""
        with self.assertRaises(ValidationError):
            diffusion_reference(SpatialGrid(1, 32, 1.0), 1.0, 0.05, [1.0])


class CompareTests(SimpleTestCase):
    """Tests for compare and variance_errors."""

    def setUp(self):
        self.reference = Reference(np.array([0.0, 1.0]), np.ones((2, 2, 3)), "closed-form")

    def test_identical_series(self):
        """Test that comparing a series with itself gives zero error."""
        report = compare((self.reference.times, self.reference.values), self.reference)
        self.assertEqual(report.max_l1, 0.0)
        self.assertEqual(report.max_linf, 0.0)

    def test_offset_series(self):
        """Test the L1 and sup errors and the per-class rows for a uniform offset."""
        report = compare((self.reference.times, self.reference.values + 1e-3), self.reference)
        self.assertAlmostEqual(report.max_linf, 1e-3, delta=1e-15)
        self.assertAlmostEqual(report.max_l1, 6e-3, delta=1e-14)
        self.assertEqual(list(report.rows())[0]["class_2"], report.per_class[0][1])

    def test_time_mismatch(self):
        """Test that series on different times cannot be compared."""
        with self.assertRaises(ValidationError):
            compare((np.array([0.0, 0.5]), self.reference.values), self.reference)

    def test_report_document(self):
        """Test the JSON document of an error report."""
        document = compare((self.reference.times, self.reference.values), self.reference).to_dict()
        self.assertEqual(document["provenance"], "closed-form")
        self.assertEqual(document["times"], [0.0, 1.0])


class RunAgainstReferenceTests(SimpleTestCase):
    """End-to-end comparisons of solver runs with independent references."""

    def test_homogeneous_constant_kernel(self):
        """Test a one-cell K = 1 run against RK4 to 1e-4 in L1."""
        model = build_constant_model(16)
        scenario = Scenario(model, SpatialGrid(1, 1, 1.0), MONODISPERSE, dt=1e-3, t_end=1.0, cadence=250)
        trajectory = run(scenario)
        reference = homogeneous_ode(model, [1.0], t_end=1.0, dt_ref=1e-4, times=trajectory.times)
        self.assertLessEqual(compare(trajectory, reference).max_l1, 1e-4)

    def test_homogeneous_error_is_second_order_in_dt(self):
        """Test that halving dt cuts the error against the RK4 reference about fourfold for both integrators."""
        model = build_constant_model(16)
        grid = SpatialGrid(1, 1, 1.0)
        for integrator in ("strang", "duhamel"):
            errors = []
            for dt in (0.02, 0.01):
                scenario = Scenario(model, grid, MONODISPERSE, dt=dt, t_end=0.5, integrator=integrator)
                trajectory = run(scenario)
                reference = homogeneous_ode(model, [1.0], t_end=0.5, dt_ref=1e-3, times=trajectory.times)
                errors.append(compare(trajectory, reference).max_l1)
            with self.subTest(integrator=integrator):
                self.assertGreater(errors[1], 0.0)
                self.assertGreaterEqual(np.log2(errors[0] / errors[1]), 1.5)

    def test_gaussian_diffusion(self):
        """Test a pure-diffusion run against the analytic Gaussian in variance and L1."""
        grid = SpatialGrid(1, 128, 2.0)
        init = InitialCondition("profile", {"shape": "gaussian", "variance": 0.01, "amount": 1.0})
        model = build_constant_model(1, rate=0.0)
        trajectory = run(Scenario(model, grid, init, dt=0.01, t_end=0.04))
        reference = diffusion_reference(grid, 1.0, 0.01, trajectory.times)
        errors = variance_errors(trajectory, reference, grid, center=[1.0])
        self.assertLessEqual(max(error for _, error in errors), 0.02)
        self.assertLessEqual(compare(trajectory, reference).max_l1, 1e-3)

    def test_diffusion_error_decreases_with_resolution(self):
        """Test that doubling the grid resolution cuts the diffusion error at second order."""
        init = InitialCondition("profile", {"shape": "gaussian", "variance": 0.02, "amount": 1.0})
        model = build_constant_model(1, rate=0.0)
        errors = []
        for cells in (8, 16):
            grid = SpatialGrid(1, cells, 2.0)
            trajectory = run(Scenario(model, grid, init, dt=0.01, t_end=0.04))
            reference = diffusion_reference(grid, 1.0, 0.02, trajectory.times)
            errors.append(compare(trajectory, reference).max_l1)
        self.assertGreaterEqual(np.log2(errors[0] / errors[1]), 1.9)
