"""
Unit tests for the solver app.
Tests both integrators, runs with diagnostics, refinement studies and residuals.
"""

from itertools import islice

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from coagulation.fluxes import CoagFlux, gain, truncated_flux
from core.exceptions import AdmissibilityError, ConvergenceError, HistoryLimitError, StabilityError
from heatflow.propagators import diffuse
from state.measures import DefectState, SpatialGrid, StateMeasure, norm_l1, total_mass
from typespace.kernels import build_constant_model, build_es_model, build_table_model

from .diagnostics import DiagnosticsRow
from .integrators import build_step_tables, picard_iterates, step_duhamel, step_strang
from .refinement import converge_dt, converge_dx, minimal_iteration, refine_in_M, restrict
from .residuals import weak_residual
from .runs import run
from .scenarios import InitialCondition, Scenario

MONODISPERSE = InitialCondition("monodisperse", {"mass_class": 1, "density": 1.0})
COSINE = InitialCondition(
    "profile", {"mass_class": 1, "shape": "cosine", "background": 1.0, "amplitude": 0.5, "wavenumber": 1}
)


def make_scenario(model, grid, init=MONODISPERSE, dt=0.01, t_end=0.1, **kwargs):
    return Scenario(model=model, grid=grid, init=init, dt=dt, t_end=t_end, **kwargs)


def combined_mass(kappa, lam, grid):
    return total_mass(kappa, grid, 1.0) + total_mass(lam, grid, 1.0)


class ScenarioTests(SimpleTestCase):
    """Tests for scenario validation and initial data."""

    def test_t_end_must_be_whole_steps(self):
        """Test that a dt not dividing t_end is refused."""
        with self.assertRaises(ValidationError):
            make_scenario(build_es_model(2), SpatialGrid(1, 1, 1.0), dt=0.03, t_end=0.1)

    def test_unknown_integrator(self):
        """Test that an unknown integrator name is refused."""
        with self.assertRaises(ValidationError):
            make_scenario(build_es_model(2), SpatialGrid(1, 1, 1.0), integrator="euler")

    def test_heavy_classes_start_as_defects(self):
        """Test that initial mass above class M starts in the defect state."""
        init = InitialCondition("monodisperse", {"mass_class": 3, "density": 2.0})
        scenario = make_scenario(build_es_model(2), SpatialGrid(1, 2, 1.0), init=init)
        self.assertFalse(scenario.kappa0.any())
        self.assertEqual(scenario.lambda0[2, 0], 2.0)
        self.assertEqual(scenario.lambda0.shape, (4, 2))
        state, defect = scenario.initial_state
        self.assertIsInstance(state, StateMeasure)
        self.assertIsInstance(defect, DefectState)
        np.testing.assert_array_equal(defect.eta, [2.0 * defect.weights[2]] * 2)

    def test_initial_state_is_read_only(self):
        """Test that the cached initial state cannot be mutated through the arrays it exposes."""
        scenario = make_scenario(build_es_model(2), SpatialGrid(1, 2, 1.0))
        state, defect = scenario.initial_state
        with self.assertRaises(ValueError):
            state.density[0, 0] = 5.0
        with self.assertRaises(ValueError):
            defect.density[0, 0] = 5.0
        kappa = scenario.kappa0
        kappa[0, 0] = 5.0
        self.assertEqual(scenario.kappa0[0, 0], 1.0)

    def test_negative_cosine_rejected(self):
        """Test that a cosine profile dipping below zero is refused when evaluated."""
        init = InitialCondition("profile", {"shape": "cosine", "background": 0.1, "amplitude": 0.5})
        scenario = make_scenario(build_es_model(2), SpatialGrid(1, 8, 1.0), init=init)
        with self.assertRaises(ValidationError):
            scenario.initial

    def test_truncation_rejects_unrepresentable_data(self):
        """Test that truncating below the initial mass class is refused."""
        init = InitialCondition("monodisperse", {"mass_class": 6})
        scenario = make_scenario(build_constant_model(4), SpatialGrid(1, 1, 1.0), init=init)
        with self.assertRaises(ValidationError):
            scenario.truncated(2)


class StrangStepTests(SimpleTestCase):
    """Tests for step_strang."""

    def test_zero_kernel_is_pure_diffusion(self):
        """Test that a zero kernel reduces the Strang step to two half diffusions."""
        grid = SpatialGrid(1, 16, 1.0)
        model = build_constant_model(3, rate=0.0)
        scenario = make_scenario(model, grid, init=COSINE)
        tables = build_step_tables(grid, model, 0.01)
        result = step_strang(scenario.kappa0, scenario.lambda0, model, tables, 0.01)
        expected = diffuse(diffuse(scenario.kappa0, tables.half), tables.half)
        np.testing.assert_array_equal(result.kappa, expected)

    def test_single_cell_reduces_to_ode_step(self):
        """Test that on one cell the step is exactly one SSP-RK2 step of the flux."""
        grid = SpatialGrid(1, 1, 1.0)
        model = build_es_model(4)
        kappa = np.array([[1.0], [0.5], [0.25], [0.0]])
        lam = np.zeros((8, 1))
        result = step_strang(kappa, lam, model, build_step_tables(grid, model, 0.01), 0.01)
        first = truncated_flux(kappa, lam, model)
        stage_kappa, stage_lam = kappa + 0.01 * first.dkappa, lam + 0.01 * first.dlambda
        second = truncated_flux(stage_kappa, stage_lam, model)
        np.testing.assert_array_equal(result.kappa, 0.5 * (kappa + (stage_kappa + 0.01 * second.dkappa)))
        np.testing.assert_array_equal(result.lam, 0.5 * (lam + (stage_lam + 0.01 * second.dlambda)))

    def test_combined_mass_conserved(self):
        """Test that live plus defect mass is conserved and stays non-negative over several steps."""
        grid = SpatialGrid(1, 16, 1.0)
        model = build_es_model(6)
        scenario = make_scenario(model, grid, init=COSINE)
        tables = build_step_tables(grid, model, 0.01)
        kappa, lam = scenario.kappa0, scenario.lambda0
        before = combined_mass(kappa, lam, grid)
        for _ in range(5):
            result = step_strang(kappa, lam, model, tables, 0.01)
            kappa, lam = result.kappa, result.lam
        self.assertAlmostEqual(combined_mass(kappa, lam, grid) / before, 1.0, delta=1e-12)
        self.assertTrue(np.all(kappa >= 0) and np.all(lam >= 0))

    def test_sub_cycles_stiff_steps(self):
        """Test that c_max dt = 2.5 is split into five substeps."""
        grid = SpatialGrid(1, 1, 1.0)
        model = build_constant_model(2, rate=1.0)
        kappa = np.array([[50.0], [0.0]])
        result = step_strang(kappa, np.zeros((4, 1)), model, build_step_tables(grid, model, 0.05), 0.05)
        self.assertEqual(result.substeps, 5)

    @override_settings(COAGDIFF={"MAX_SUBSTEPS": 2})
    def test_stability_error_names_rate(self):
        """Test that exceeding MAX_SUBSTEPS raises StabilityError naming c_max."""
        grid = SpatialGrid(1, 1, 1.0)
        model = build_constant_model(2, rate=1.0)
        kappa = np.array([[100.0], [0.0]])
        with self.assertRaises(StabilityError) as ctx:
            step_strang(kappa, np.zeros((4, 1)), model, build_step_tables(grid, model, 0.1), 0.1)
        self.assertEqual(ctx.exception.c_max, 100.0)
        self.assertIn("c_max", str(ctx.exception))

    @override_settings(COAGDIFF={"STAGE_POSITIVITY_LIMIT": 0.1})
    def test_stage_positivity_limit_is_configurable(self):
        """Test that a forward-Euler stage above STAGE_POSITIVITY_LIMIT is refused."""
        grid = SpatialGrid(1, 1, 1.0)
        model = build_constant_model(2, rate=1.0)
        kappa = np.array([[50.0], [0.0]])
        with self.assertRaises(StabilityError) as ctx:
            step_strang(kappa, np.zeros((4, 1)), model, build_step_tables(grid, model, 0.05), 0.05)
        self.assertIn("> 0.1", str(ctx.exception))


class DuhamelStepTests(SimpleTestCase):
    """Tests for step_duhamel."""

    def test_zero_kernel_agrees_with_splitting(self):
        """Test that without coagulation both integrators reduce to the same diffusion after one iteration."""
        grid = SpatialGrid(1, 40, 2.0)
        model = build_constant_model(2, rate=0.0)
        scenario = make_scenario(model, grid, init=COSINE, dt=0.02, t_end=0.02)
        tables = build_step_tables(grid, model, 0.02)
        strang = step_strang(scenario.kappa0, scenario.lambda0, model, tables, 0.02)
        duhamel = step_duhamel(scenario.kappa0, scenario.lambda0, model, tables, 0.02)
        np.testing.assert_allclose(duhamel.kappa, strang.kappa, rtol=0, atol=1e-10)
        self.assertEqual(duhamel.iterations, 1)

    def test_mass_conserved(self):
        """Test that a Duhamel step conserves mass without clipping."""
        grid = SpatialGrid(1, 16, 1.0)
        model = build_es_model(6)
        scenario = make_scenario(model, grid, init=COSINE)
        tables = build_step_tables(grid, model, 0.01)
        result = step_duhamel(scenario.kappa0, scenario.lambda0, model, tables, 0.01)
        before = combined_mass(scenario.kappa0, scenario.lambda0, grid)
        self.assertAlmostEqual(combined_mass(result.kappa, result.lam, grid) / before, 1.0, delta=1e-12)
        self.assertEqual(result.clip_mass, 0.0)

    def test_non_convergence(self):
        """Test that hitting kmax before the tolerance raises ConvergenceError."""
        grid = SpatialGrid(1, 1, 1.0)
        model = build_es_model(4)
        kappa = np.array([[1.0], [0.0], [0.0], [0.0]])
        with self.assertRaises(ConvergenceError):
            step_duhamel(kappa, np.zeros((8, 1)), model, build_step_tables(grid, model, 0.01), 0.01, tol=1e-300, kmax=1)

    def test_precheck(self):
        """Test that c_max dt above the stability limit is refused before iterating."""
        grid = SpatialGrid(1, 1, 1.0)
        model = build_constant_model(2, rate=1.0)
        kappa = np.array([[100.0], [0.0]])
        with self.assertRaises(StabilityError):
            step_duhamel(kappa, np.zeros((4, 1)), model, build_step_tables(grid, model, 0.01), 0.01)

    def test_gain_only_iterates_increase(self):
        """Test that with loss and defects switched off the Picard iterates increase towards their limit."""
        grid = SpatialGrid(1, 8, 1.0)
        model = build_constant_model(4)
        scenario = make_scenario(model, grid, init=COSINE, dt=0.05, t_end=0.05)
        m = model.num_classes

        def gain_only(kappa, lam, model):
            return CoagFlux(gain(kappa, model)[:m], np.zeros_like(lam))

        tables = build_step_tables(grid, model, 0.05)
        sequence = picard_iterates(scenario.kappa0, scenario.lambda0, model, tables, 0.05, flux=gain_only)
        iterates = list(islice(sequence, 10))
        changes = []
        for previous, current in zip(iterates, iterates[1:], strict=False):
            self.assertTrue(np.all(current[0] >= previous[0]))
            np.testing.assert_array_equal(current[1], previous[1])
            changes.append(float((current[0] - previous[0]).max()))
        self.assertGreater(changes[0], 0.0)
        self.assertLess(changes[-1], changes[0])

    def test_step_is_the_converged_iterate(self):
        """Test that step_duhamel returns the Picard iterate at which the change fell below tolerance."""
        grid = SpatialGrid(1, 8, 1.0)
        model = build_es_model(4)
        scenario = make_scenario(model, grid, init=COSINE)
        tables = build_step_tables(grid, model, 0.01)
        result = step_duhamel(scenario.kappa0, scenario.lambda0, model, tables, 0.01)
        sequence = picard_iterates(scenario.kappa0, scenario.lambda0, model, tables, 0.01)
        iterates = list(islice(sequence, result.iterations + 1))
        np.testing.assert_array_equal(result.kappa, iterates[-1][0])
        np.testing.assert_array_equal(result.lam, iterates[-1][1])

    def test_integrators_agree_to_second_order(self):
        """Test that the two integrators differ by O(dt^2)."""
        grid = SpatialGrid(1, 64, 1.0)
        model = build_es_model(8)
        distances = []
        for dt in (0.01, 0.005):
            strang = run(make_scenario(model, grid, init=COSINE, dt=dt, t_end=0.1))
            duhamel = run(make_scenario(model, grid, init=COSINE, dt=dt, t_end=0.1, integrator="duhamel"))
            distances.append(np.abs(strang.final_kappa - duhamel.final_kappa).sum() * grid.cell_volume)
        self.assertGreaterEqual(np.log2(distances[0] / distances[1]), 1.5)


class RunTests(SimpleTestCase):
    """Tests for run and its diagnostics."""

    def test_zero_horizon_returns_initial_state(self):
        """Test that t_end = 0 records only the initial state."""
        scenario = make_scenario(build_es_model(4), SpatialGrid(1, 4, 1.0), t_end=0.0)
        trajectory = run(scenario)
        self.assertEqual(trajectory.times, [0.0])
        self.assertEqual(len(trajectory.diagnostics), 1)
        np.testing.assert_array_equal(trajectory.final_kappa, scenario.kappa0)

    def test_es_uniform_horizon_and_monitors(self):
        """Test alpha, zeta and the bound monitors for uniform ES data run past the horizon."""
        scenario = make_scenario(build_es_model(32), SpatialGrid(1, 1, 1.0), dt=1e-3, t_end=1.0, cadence=50)
        trajectory = run(scenario)
        self.assertAlmostEqual(trajectory.horizon.alpha, 4.0, delta=1e-12)
        self.assertAlmostEqual(trajectory.horizon.zeta_lower, 0.25, delta=1e-12)
        self.assertAlmostEqual(trajectory.times[-1], 1.0)
        for row in trajectory.diagnostics:
            self.assertTrue(row.bound_global_ok)
            self.assertIn(row.bound_horizon_ok, (True, None))
        self.assertIsNone(trajectory.diagnostics[-1].bound_horizon_ok)

    def test_w_heavy_horizon_monitor(self):
        """Test the (zeta - t)^-1 bound for K = w w' with v = w / 2 up to 0.8 zeta."""
        w = 1.0 + np.sqrt(np.arange(1, 17, dtype=float))
        model = build_table_model(8, 1.0, 1, diffusivity=[1.0], weights=w, kernel=np.outer(w, w), v_weights=w / 2)
        trajectory = run(make_scenario(model, SpatialGrid(1, 1, 1.0), dt=1e-3, t_end=0.2))
        self.assertAlmostEqual(trajectory.horizon.zeta_lower, 0.25, delta=1e-12)
        self.assertTrue(trajectory.report.passed)
        self.assertTrue(all(row.bound_horizon_ok for row in trajectory.diagnostics))

    def test_conservation_and_monotone_moments(self):
        """Test that mass is conserved while <w, mu> and live mass never increase."""
        grid = SpatialGrid(1, 16, 1.0)
        scenario = make_scenario(build_es_model(8), grid, init=COSINE, dt=0.005, t_end=0.5, cadence=10)
        trajectory = run(scenario)
        first = trajectory.diagnostics[0]
        total = first.mass_mu + first.mass_lambda
        previous = first
        for row in trajectory.diagnostics[1:]:
            self.assertAlmostEqual((row.mass_mu + row.mass_lambda) / total, 1.0, delta=1e-10)
            self.assertLessEqual(row.wmom_l1, previous.wmom_l1 + 1e-10)
            self.assertLessEqual(row.mass_mu, previous.mass_mu + 1e-10)
            previous = row

    def test_duhamel_run_positive_and_accepted(self):
        """Test that a Duhamel run stays non-negative and within the accepted clipping."""
        grid = SpatialGrid(1, 16, 1.0)
        scenario = make_scenario(build_es_model(8), grid, init=COSINE, t_end=0.2, integrator="duhamel")
        trajectory = run(scenario)
        self.assertTrue(trajectory.accepted)
        self.assertTrue(all(np.all(k >= 0) for k in trajectory.kappa))

    def test_scaled_mass_function_is_proportional(self):
        """Test that doubling the mass unit doubles the reported mass."""
        grid = SpatialGrid(1, 8, 1.0)
        trajectory = run(make_scenario(build_es_model(4), grid, init=COSINE))
        kappa, lam = trajectory.final_kappa, trajectory.final_lam
        scaled = total_mass(kappa, grid, 2.0) + total_mass(lam, grid, 2.0)
        self.assertEqual(scaled, 2.0 * combined_mass(kappa, lam, grid))

    def test_admissibility_gate(self):
        """Test that an inadmissible model only runs when forced."""
        model = build_table_model(
            2, 1.0, 1, diffusivity=[1.0, 2.0, 3.0, 4.0], weights=[1.0] * 4, kernel=np.zeros((4, 4))
        )
        scenario = make_scenario(model, SpatialGrid(1, 4, 1.0))
        with self.assertRaises(AdmissibilityError):
            run(scenario)
        trajectory = run(scenario, force=True)
        self.assertFalse(trajectory.report.passed)

    def test_cadence_keeps_final_time(self):
        """Test that the final time is recorded even when cadence skips it."""
        trajectory = run(make_scenario(build_es_model(2), SpatialGrid(1, 1, 1.0), dt=0.01, t_end=0.1, cadence=3))
        np.testing.assert_allclose(trajectory.times, [0.0, 0.03, 0.06, 0.09, 0.1])

    def test_runs_are_deterministic(self):
        """Test that two runs of one scenario agree bit for bit."""
        scenario = make_scenario(build_es_model(4), SpatialGrid(1, 8, 1.0), init=COSINE)
        first, second = run(scenario), run(scenario)
        np.testing.assert_array_equal(first.final_kappa, second.final_kappa)
        self.assertEqual([r.as_csv_row() for r in first.diagnostics], [r.as_csv_row() for r in second.diagnostics])

    def test_trajectory_records_state_measures(self):
        """Test that each recorded output is a StateMeasure with a DefectState whose eta feeds eta_l1."""
        grid = SpatialGrid(1, 8, 1.0)
        model = build_es_model(4)
        trajectory = run(make_scenario(model, grid, init=COSINE, dt=0.01, t_end=0.05))
        self.assertEqual(len(trajectory.states), len(trajectory.times))
        for state, defect, row in zip(trajectory.states, trajectory.defects, trajectory.diagnostics, strict=True):
            self.assertIsInstance(state, StateMeasure)
            self.assertIsInstance(defect, DefectState)
            np.testing.assert_allclose(defect.eta, model.weights @ defect.density, rtol=1e-12, atol=0.0)
            self.assertEqual(row.eta_l1, norm_l1(defect.eta, grid))
        self.assertGreater(trajectory.diagnostics[-1].eta_l1, 0.0)

    def test_diagnostics_row_format(self):
        """Test the CSV encoding of bound flags and the column order."""
        row = DiagnosticsRow(0.5, 1.0, 0.0, 0.0, 2.0, 2.0, 4.0, True, None, 0.0)
        self.assertEqual(row.as_csv_row()[7:9], ["1", ""])
        self.assertEqual(DiagnosticsRow.columns()[0], "t")


class RefinementTests(SimpleTestCase):
    """Tests for refine_in_M, minimal_iteration and convergence studies."""

    def test_zero_kernel_refinement_is_clean(self):
        """Test that refinement without coagulation shows no violations."""
        scenario = make_scenario(build_constant_model(8, rate=0.0), SpatialGrid(1, 8, 1.0), init=COSINE)
        report = refine_in_M(scenario, [2, 4, 8])
        self.assertTrue(report.clean)
        for comparison in report.comparisons:
            self.assertLessEqual(comparison.worst_kappa_excess, 0.0)

    def test_constant_kernel_monotone_in_M(self):
        """Test that kappa grows and eta shrinks as M grows under K = 1."""
        scenario = make_scenario(build_constant_model(16), SpatialGrid(1, 1, 1.0), dt=0.01, t_end=2.0, cadence=10)
        report = refine_in_M(scenario, [4, 8, 16])
        self.assertTrue(report.clean, report.comparisons)
        for n in range(len(report.times)):
            self.assertGreaterEqual(report.eta_l1[4][n] + 1e-12, report.eta_l1[8][n])
            self.assertGreaterEqual(report.eta_l1[8][n] + 1e-12, report.eta_l1[16][n])
        self.assertEqual(len(list(report.rows())), 3)

    def test_levels_out_of_range(self):
        """Test that levels above the model's M are refused."""
        scenario = make_scenario(build_constant_model(4), SpatialGrid(1, 1, 1.0))
        with self.assertRaises(ValidationError):
            refine_in_M(scenario, [4, 8])

    def test_minimal_iteration_zero_kernel(self):
        """Test that without coagulation the first iterate already equals the run."""
        scenario = make_scenario(build_constant_model(4, rate=0.0), SpatialGrid(1, 8, 1.0), init=COSINE, integrator="duhamel")
        result = minimal_iteration(scenario, kmax=2)
        self.assertEqual(result.gaps[0], 0.0)

    def test_minimal_iteration_constant_kernel(self):
        """Test that the gaps shrink monotonically and iterates stay below the Duhamel run."""
        scenario = make_scenario(build_constant_model(8), SpatialGrid(1, 1, 1.0), dt=0.01, t_end=1.0, integrator="duhamel")
        result = minimal_iteration(scenario, kmax=30)
        for earlier, later in zip(result.gaps, result.gaps[1:], strict=False):
            self.assertLessEqual(later, earlier + 1e-12)
        self.assertTrue(all(excess <= 1e-10 for excess in result.excess))
        self.assertLessEqual(min(result.gaps[:31]), 1e-6)

    def test_minimal_iteration_keeps_iterates(self):
        """Test that kept iterates increase and stay below the run."""
        scenario = make_scenario(build_constant_model(4), SpatialGrid(1, 1, 1.0), dt=0.01, t_end=0.5, integrator="duhamel")
        trajectory = run(scenario, every_step=True)
        result = minimal_iteration(scenario, kmax=5, trajectory=trajectory, keep_iterates=True)
        _, mu, _ = trajectory.stacked()
        self.assertEqual(len(result.iterates), result.iterations)
        for earlier, later in zip(result.iterates, result.iterates[1:], strict=False):
            self.assertGreaterEqual((later - earlier).min(), -1e-14)
            self.assertLessEqual((later - mu).max(), 1e-10)

    def test_minimal_iteration_splitting_run_stays_below(self):
        """Test that the gap also shrinks against a splitting run."""
        scenario = make_scenario(build_constant_model(4), SpatialGrid(1, 1, 1.0), dt=0.01, t_end=0.5)
        result = minimal_iteration(scenario, kmax=10)
        self.assertGreater(result.gaps[0], result.gaps[-1])

    @override_settings(COAGDIFF={"MAX_HISTORY_VALUES": 10})
    def test_history_guard(self):
        """Test that the storage guard refuses oversized iterations."""
        scenario = make_scenario(build_constant_model(4), SpatialGrid(1, 1, 1.0))
        with self.assertRaises(HistoryLimitError):
            minimal_iteration(scenario)

    def test_dt_study_single_level(self):
        """Test that a one-level dt study has no difference or order."""
        scenario = make_scenario(build_es_model(2), SpatialGrid(1, 1, 1.0))
        rows = converge_dt(scenario, levels=1)
        self.assertEqual(len(rows), 1)
        self.assertIsNone(rows[0].difference)
        self.assertIsNone(rows[0].order)

    def test_dt_study_second_order(self):
        """Test that the dt study observes second order."""
        scenario = make_scenario(build_es_model(8), SpatialGrid(1, 64, 1.0), init=COSINE, dt=0.01, t_end=0.1)
        rows = converge_dt(scenario, levels=3)
        self.assertGreaterEqual(rows[0].order, 1.5)

    def test_dx_study_orders(self):
        """Test the grid spacings and observed order of a dx study."""
        init = InitialCondition("profile", {"shape": "gaussian", "variance": 0.05, "background": 0.0, "amount": 1.0})
        scenario = make_scenario(build_constant_model(1, rate=0.0), SpatialGrid(1, 16, 2.0), init=init, dt=0.01, t_end=0.02)
        rows = converge_dx(scenario, levels=3)
        self.assertEqual([row.parameter for row in rows], [0.125, 0.0625, 0.03125])
        self.assertIsNotNone(rows[0].order)
        self.assertGreaterEqual(rows[0].order, 1.8)

    def test_restrict_averages_blocks(self):
        """Test that restriction averages 2 x 2 blocks."""
        fine = SpatialGrid(2, 4, 1.0)
        density = np.arange(16, dtype=float)[None, :]
        coarse = restrict(density, fine)
        np.testing.assert_array_equal(coarse, [[2.5, 4.5, 10.5, 12.5]])


class WeakResidualTests(SimpleTestCase):
    """Tests for weak_residual."""

    def test_constant_function_zero_kernel(self):
        """Test that the residual vanishes for f = 1 without coagulation."""
        trajectory = run(make_scenario(build_constant_model(2, rate=0.0), SpatialGrid(1, 16, 1.0), init=COSINE))
        residual = weak_residual(trajectory, np.ones(2))
        np.testing.assert_allclose(residual, 0.0, atol=1e-13)

    def test_mass_is_additive_below_truncation(self):
        """Test that f = m gives a negligible residual when nothing overflows."""
        model = build_constant_model(32)
        trajectory = run(make_scenario(model, SpatialGrid(1, 1, 1.0), dt=0.01, t_end=0.5))
        residual = weak_residual(trajectory, model.masses[:32])
        self.assertLessEqual(np.abs(residual).max(), 1e-8)

    def test_support_outside_live_range_rejected(self):
        """Test that test functions longer than M are refused."""
        model = build_constant_model(2)
        trajectory = run(make_scenario(model, SpatialGrid(1, 1, 1.0), t_end=0.0))
        with self.assertRaises(ValidationError):
            weak_residual(trajectory, np.ones(4))

    def test_smooth_function_residual_converges(self):
        """Test that the residual for a smooth f shrinks under refinement."""
        model = build_constant_model(1, rate=0.0)
        residuals = []
        for cells, dt in ((16, 0.01), (32, 0.005)):
            grid = SpatialGrid(1, cells, 1.0)
            trajectory = run(make_scenario(model, grid, init=COSINE, dt=dt, t_end=0.05))
            f = np.cos(2 * np.pi * grid.centers())[None, :]
            residuals.append(np.abs(weak_residual(trajectory, f)).max())
        self.assertGreaterEqual(np.log2(residuals[0] / residuals[1]), 1.0)
