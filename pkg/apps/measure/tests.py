import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from apps.measure.density import (
    density_conversion_bound,
    density_report,
    lebesgue_density,
    mu_alpha_interval,
    mu_density,
)
from apps.measure.generators import generate_set
from apps.measure.models import InvalidSetError, MeasureError, RadialSet, mu_constant


class MuIntervalTests(SimpleTestCase):
    def test_unit_interval_order_zero(self):
        self.assertAlmostEqual(mu_alpha_interval(0.0, 0.0, 1.0), math.pi, places=14)

    def test_degenerate_interval(self):
        self.assertEqual(mu_alpha_interval(1.3, 2.0, 2.0), 0.0)

    def test_half_order_against_quadrature(self):
        c = 2.0 * math.pi**1.5 / gamma_fn(1.5)
        self.assertAlmostEqual(mu_constant(0.5), c, places=12)
        expected = c * 7.0 / 3.0
        numeric, _ = quad(lambda x: c * x**2, 1.0, 2.0)
        self.assertAlmostEqual(mu_alpha_interval(0.5, 1.0, 2.0), expected, places=12)
        self.assertAlmostEqual(numeric, expected, places=12)

    def test_additivity(self):
        for alpha in (-0.3, 0.0, 0.5, 2.0):
            whole = mu_alpha_interval(alpha, 0.3, 7.0)
            split = mu_alpha_interval(alpha, 0.3, 2.2) + mu_alpha_interval(alpha, 2.2, 7.0)
            self.assertLess(abs(whole - split), 1e-13 * whole)

    def test_rejects_bad_intervals(self):
        with self.assertRaises(MeasureError):
            mu_alpha_interval(0.0, -1.0, 1.0)
        with self.assertRaises(MeasureError):
            mu_alpha_interval(0.0, 2.0, 1.0)
        with self.assertRaises(MeasureError):
            mu_alpha_interval(-0.5, 0.0, 1.0)


class RadialSetTests(SimpleTestCase):
    def test_overlapping_intervals_are_merged(self):
        E = RadialSet([(2.0, 3.0), (0.0, 1.0), (0.5, 1.5)], t_max=10.0)
        self.assertEqual(E.intervals, [(0.0, 1.5), (2.0, 3.0)])

    def test_periodic_pieces_and_measure(self):
        E = RadialSet([(0.0, 0.5)], period=1.0, t_max=10.0)
        self.assertEqual(E.pieces(0.25, 2.25), [(0.25, 0.5), (1.0, 1.5), (2.0, 2.25)])
        self.assertAlmostEqual(float(E.lebesgue(0.25, 2.25)), 1.0, places=14)
        self.assertAlmostEqual(float(E.mu(0.0, 1.0, 1.5)), mu_alpha_interval(0.0, 1.0, 1.5), places=12)

    def test_indicator(self):
        E = RadialSet([(1.0, 2.0), (4.0, 5.0)], t_max=10.0)
        np.testing.assert_array_equal(E.indicator([0.5, 1.5, 3.0, 4.0, 6.0]), [False, True, False, True, False])

    def test_invalid_descriptions(self):
        with self.assertRaises(InvalidSetError):
            RadialSet([(1.0, 0.5)])
        with self.assertRaises(InvalidSetError):
            RadialSet([(0.2, 1.4)], period=1.0)
        with self.assertRaises(InvalidSetError):
            RadialSet.from_dict({"intervals": [[0, 1]], "shape": "odd"})

    def test_json_schema(self):
        E = RadialSet.from_json('{"intervals": [[0, 0.5]], "period": 1.0, "t_max": 50}')
        self.assertTrue(E.is_periodic)
        self.assertEqual(E.t_max, 50.0)

    def test_union_of_periodic_sets(self):
        E = RadialSet([(0.0, 0.25)], period=1.0, t_max=20.0)
        F = RadialSet([(0.5, 0.75)], period=1.0, t_max=20.0)
        union = E.union(F)
        self.assertTrue(union.is_periodic)
        self.assertAlmostEqual(lebesgue_density(union).gamma_lebesgue, 0.5, places=12)


class DensityTests(SimpleTestCase):
    def test_half_line_is_fully_dense(self):
        E = RadialSet.half_line(t_max=100.0)
        self.assertEqual(lebesgue_density(E).gamma_lebesgue, 1.0)
        self.assertAlmostEqual(mu_density(0.5, E).gamma_mu, 1.0, places=12)

    def test_half_blocks(self):
        E = RadialSet([(0.0, 0.5)], period=1.0, t_max=100.0)
        self.assertAlmostEqual(lebesgue_density(E, 1.0).gamma_lebesgue, 0.5, places=12)

    def test_sparse_blocks_have_zero_density(self):
        E = RadialSet([(0.0, 0.5)], period=2.0, t_max=100.0)
        report = lebesgue_density(E, 1.0)
        self.assertAlmostEqual(report.gamma_lebesgue, 0.0, places=12)
        self.assertAlmostEqual(report.argmin_r, 0.5, places=12)
        self.assertAlmostEqual(mu_density(2.0, E).gamma_mu, 0.0, places=12)

    def test_breakpoint_scan_matches_brute_force(self):
        E = RadialSet([(0.1, 0.4), (0.9, 1.3)], period=1.7, t_max=50.0)
        r = np.linspace(0.0, 1.7, 100001)
        brute = float(np.min(E.lebesgue(r, r + 1.0)))
        exact = lebesgue_density(E, 1.0).gamma_lebesgue
        self.assertLessEqual(exact, brute + 1e-12)
        self.assertLess(brute - exact, 1e-4)

    def test_mu_density_of_half_blocks(self):
        E = RadialSet([(0.0, 0.5)], period=1.0, t_max=100.0)
        value = mu_density(0.0, E).gamma_mu
        self.assertGreater(value, 0.0)
        self.assertLessEqual(value, 0.5)
        self.assertGreaterEqual(value, density_conversion_bound(0.0, 0.5))

    def test_growing_the_set_never_lowers_density(self):
        E = RadialSet([(0.0, 0.3)], period=1.0, t_max=40.0)
        F = RadialSet([(0.6, 0.7)], period=1.0, t_max=40.0)
        self.assertGreaterEqual(mu_density(1.0, E.union(F)).gamma_mu, mu_density(1.0, E).gamma_mu - 1e-12)

    def test_report_merges_both_densities(self):
        report = density_report(0.5, RadialSet([(0.0, 0.5)], period=1.0, t_max=30.0))
        self.assertAlmostEqual(report.gamma_lebesgue, 0.5, places=12)
        self.assertIsNotNone(report.gamma_mu)
        self.assertEqual(report.alpha, 0.5)

    def test_rejects_empty_set_and_bad_window(self):
        with self.assertRaises(MeasureError):
            lebesgue_density(RadialSet.empty(t_max=10.0))
        with self.assertRaises(MeasureError):
            lebesgue_density(RadialSet.half_line(t_max=10.0), 0.0)


class ConversionBoundTests(SimpleTestCase):
    def test_values(self):
        self.assertAlmostEqual(density_conversion_bound(0.0, 1.0), 1.0 / 6.0, places=15)
        self.assertAlmostEqual(density_conversion_bound(0.5, 0.5), 0.01, places=15)
        self.assertAlmostEqual(density_conversion_bound(-0.5 + 1e-12, 1.0), 0.5, places=9)

    def test_rejects_gamma_outside_unit_interval(self):
        for gamma in (0.0, -0.1, 1.5):
            with self.assertRaises(MeasureError):
                density_conversion_bound(0.0, gamma)


class GeneratorTests(SimpleTestCase):
    def test_periodic_blocks(self):
        E = generate_set("periodic", {"period": 1.0, "block": [0.0, 0.5], "t_max": 10.0})
        self.assertEqual(E.pieces(0.0, 2.0), [(0.0, 0.5), (1.0, 1.5)])

    def test_random_union_meets_density_floor(self):
        E = generate_set("random_union", {"gamma": 0.3, "t_max": 200.0}, seed=7)
        self.assertGreaterEqual(lebesgue_density(E).gamma_lebesgue, 0.3 - 1e-9)

    def test_random_union_is_deterministic(self):
        first = generate_set("random_union", {"gamma": 0.5, "t_max": 30.0}, seed=11)
        second = generate_set("random_union", {"gamma": 0.5, "t_max": 30.0}, seed=11)
        self.assertEqual(first.intervals, second.intervals)

    def test_complement_thin_is_relatively_dense(self):
        E = generate_set("complement_thin", {"g0": 0.5, "t_max": 100.0})
        self.assertGreater(lebesgue_density(E).gamma_lebesgue, 0.0)

    def test_infeasible_requests(self):
        with self.assertRaises(InvalidSetError):
            generate_set("random_union", {"gamma": 1.2})
        with self.assertRaises(InvalidSetError):
            generate_set("random_union", {})
        with self.assertRaises(InvalidSetError):
            generate_set("fractal", {})

    @override_settings(LAB_DENSITY_GRID=256)
    def test_lebesgue_density_converts_to_mu_density(self):
        for gamma in (0.25, 0.5, 0.75):
            for seed in range(50):
                E = generate_set("random_union", {"gamma": gamma, "t_max": 12.0}, seed=seed)
                measured = lebesgue_density(E).gamma_lebesgue
                self.assertGreaterEqual(measured, gamma - 1e-9)
                for alpha in (0.0, 0.5, 2.0):
                    floor = density_conversion_bound(alpha, gamma)
                    self.assertGreaterEqual(mu_density(alpha, E).gamma_mu, floor - 0.01, msg=f"seed={seed}")
