import csv
import io
import json
import math

import numpy as np
from django.test import SimpleTestCase

from apps.measure.models import RadialSet
from apps.pls.basis import BandBasis, PartitionedGrid, bubble_values
from apps.pls.constants import gj_constant, gj_exponent, gj_naive_annulus
from apps.pls.kappa import check_kappa_stability, kappa, smallest_eigenvalue
from apps.pls.models import (
    ConcentrationConvergenceError,
    ConcentrationError,
    ConcentrationProblem,
    OverlappingBandsError,
    SweepConfig,
    SweepEntry,
    SweepResult,
)
from apps.pls.sweep import multiband_sweep, sample_positions, sweep_R


def half_blocks(fraction=0.5):
    return RadialSet([(0.0, fraction)], period=1.0)


class BasisTests(SimpleTestCase):
    def test_bubbles_are_orthonormal(self):
        x, w = np.polynomial.legendre.leggauss(40)
        values = bubble_values(12, x)
        np.testing.assert_allclose(values.T @ (w[:, None] * values), np.eye(12), atol=1e-12)
        np.testing.assert_allclose(bubble_values(12, np.array([-1.0, 1.0])), 0.0, atol=1e-14)

    def test_band_gram_is_identity(self):
        basis = BandBasis(1.5, [(3.0, 4.0), (10.0, 11.0)], 16, 40)
        np.testing.assert_allclose(basis.gram(), np.eye(32), atol=1e-11)

    def test_grid_segments_follow_set(self):
        E = half_blocks()
        grid = PartitionedGrid(0.5, E, 10.0, 2.0)
        self.assertEqual(grid.segments, 20)
        np.testing.assert_array_equal(grid.inside, E.indicator(grid.nodes))
        expected = E.mu(0.5, 0.0, 10.0)
        self.assertLess(abs(np.sum(grid.weights[grid.inside]) - expected), 1e-10 * expected)


class ProblemTests(SimpleTestCase):
    def test_validation(self):
        E = half_blocks()
        with self.assertRaises(ConcentrationError):
            ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=E, band_dim=8)
        with self.assertRaises(OverlappingBandsError):
            ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0), (4.5, 5.5)], E=E)
        with self.assertRaises(ConcentrationError):
            ConcentrationProblem(alpha=0.5, bands=[(4.0, 4.5)], E=E)
        with self.assertRaises(ConcentrationError):
            ConcentrationProblem(alpha=0.5, bands=[], E=E)

    def test_refined_doubles_resolution(self):
        problem = ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=half_blocks(), band_dim=16, t_max=40.0)
        refined = problem.refined()
        self.assertEqual(refined.band_dim, 32)
        self.assertEqual(refined.t_max, 80.0)

    def test_rejects_non_hermitian_pencil(self):
        B = np.array([[1.0, 0.5], [0.0, 1.0]])
        with self.assertRaises(ConcentrationConvergenceError):
            smallest_eigenvalue(B, np.eye(2))


class KappaTests(SimpleTestCase):
    def test_half_line_is_fully_concentrated(self):
        result = kappa(ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=RadialSet.half_line()))
        self.assertLessEqual(result.tail_bound, 0.05)
        self.assertGreaterEqual(result.kappa, 1.0 - 2.0 * result.tail_bound)
        self.assertLessEqual(result.kappa, 1.0)

    def test_envelope_tail_shrinks_with_the_window(self):
        short = kappa(ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=RadialSet.half_line(), t_max=24.0))
        wide = kappa(ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=RadialSet.half_line(), t_max=96.0))
        for result in (short, wide):
            self.assertGreaterEqual(result.envelope_tail, 0.0)
            self.assertLessEqual(result.envelope_tail, 1.0)
        self.assertLessEqual(wide.envelope_tail, short.envelope_tail + 1e-8)

    def test_empty_set_gives_zero(self):
        result = kappa(ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=RadialSet.empty()))
        self.assertAlmostEqual(result.kappa, 0.0, places=12)

    def test_monotone_in_the_set(self):
        small = kappa(ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=half_blocks(0.25), t_max=48.0))
        large = kappa(ConcentrationProblem(alpha=0.5, bands=[(4.0, 5.0)], E=half_blocks(0.5), t_max=48.0))
        self.assertLessEqual(small.kappa, large.kappa + 1e-8)
        self.assertGreater(small.kappa, 0.0)

    def test_general_order(self):
        result = kappa(ConcentrationProblem(alpha=0.0, bands=[(4.0, 5.0)], E=half_blocks()))
        self.assertGreater(result.kappa, 0.0)
        self.assertLess(result.kappa, 1.0)

    def test_half_blocks_stable_under_refinement(self):
        problem = ConcentrationProblem(alpha=0.5, bands=[(8.0, 9.0)], E=half_blocks())
        result = kappa(problem)
        refined, converged = check_kappa_stability(problem, result)
        self.assertTrue(0.0 < result.kappa < 1.0)
        self.assertTrue(converged)
        self.assertEqual(refined.band_dim, 32)

    def test_tail_failure_raises(self):
        problem = ConcentrationProblem(
            alpha=0.5, bands=[(4.0, 5.0)], E=half_blocks(), t_max=1.0, tail_tolerance=1e-12
        )
        with self.assertRaises(ConcentrationConvergenceError):
            kappa(problem)


class SweepTests(SimpleTestCase):
    def test_uniform_in_R(self):
        result = sweep_R(0.5, half_blocks(), [4, 8, 16, 32, 64], SweepConfig(threads=2))
        summary = result.summary()
        self.assertGreater(summary["min_kappa"], 0.005)
        self.assertLess(summary["ratio"], 2.0)
        self.assertTrue(summary["all_converged"])
        self.assertEqual([entry.R for entry in result.entries], [4.0, 8.0, 16.0, 32.0, 64.0])
        for entry in result.entries:
            self.assertLessEqual(entry.tail_bound, 0.05)
            self.assertLessEqual(abs(entry.kappa - entry.kappa_refined), 0.05 * entry.kappa)

    def test_half_line_entries_near_one(self):
        result = sweep_R(0.5, RadialSet.half_line(), [2, 6], SweepConfig(check_stability=False))
        for entry in result.entries:
            self.assertGreaterEqual(entry.kappa, 1.0 - 2.0 * entry.tail_bound)
            self.assertIsNotNone(entry.envelope_tail)
        self.assertIn("envelope_tail", result.metadata["tail_bound_kind"])

    def test_rejects_unordered_R(self):
        with self.assertRaises(ConcentrationError):
            sweep_R(0.5, half_blocks(), [8, 4])
        with self.assertRaises(ConcentrationError):
            sweep_R(0.5, half_blocks(), [0, 4])

    def test_celery_fan_out_matches_threads(self):
        config = SweepConfig(check_stability=False, use_celery=True)
        through_celery = sweep_R(0.5, half_blocks(), [3, 5], config)
        local = sweep_R(0.5, half_blocks(), [3, 5], SweepConfig(check_stability=False, use_celery=False))
        self.assertEqual(through_celery.kappas(), local.kappas())


class MultibandTests(SimpleTestCase):
    def test_position_uniformity(self):
        positions = [(2.0, 40.0), (2.0, 400.0), (100.0, 103.0)]
        result = multiband_sweep(0.5, 2, positions, half_blocks())
        summary = result.summary()
        self.assertGreater(summary["min_kappa"], 0.0)
        self.assertLess(summary["ratio"], 4.0)
        self.assertEqual([entry.positions for entry in result.entries], positions)

    def test_single_band_matches_sweep(self):
        config = SweepConfig(check_stability=False)
        multi = multiband_sweep(0.5, 1, [(6.0,)], half_blocks(), config)
        single = sweep_R(0.5, half_blocks(), [6.0], config)
        self.assertEqual(multi.kappas(), single.kappas())

    def test_half_line_two_bands(self):
        result = multiband_sweep(1.5, 2, [(3.0, 9.0)], RadialSet.half_line(), SweepConfig(check_stability=False))
        entry = result.entries[0]
        self.assertGreaterEqual(entry.kappa, 1.0 - 2.0 * entry.tail_bound)

    def test_rejects_overlap_and_order(self):
        with self.assertRaises(OverlappingBandsError):
            multiband_sweep(0.5, 2, [(2.0, 2.5)], half_blocks())
        with self.assertRaises(ConcentrationError):
            multiband_sweep(1.0, 2, [(2.0, 5.0)], half_blocks())
        with self.assertRaises(ConcentrationError):
            multiband_sweep(0.5, 2, [(2.0, 5.0, 9.0)], half_blocks())

    def test_seeded_positions(self):
        first = sample_positions(3, 5, seed=7, spread=50.0)
        self.assertEqual(first, sample_positions(3, 5, seed=7, spread=50.0))
        for positions in first:
            self.assertTrue(all(b - a >= 1.0 for a, b in zip(positions, positions[1:])))
            self.assertLessEqual(positions[-1] + 1.0, 50.0)


class ExplicitConstantTests(SimpleTestCase):
    def test_exponent_term_by_term(self):
        for R in (1.0, 2.0, 4.0):
            constant = gj_constant(0.0, 0.5, R)
            exponent = 160.0 * math.sqrt(3.0) * math.pi / (2.0 * math.log(2.0)) * R + 1.0
            self.assertLess(abs(constant.exponent - exponent), 1e-12 * exponent)
            expected = math.log10(1.5) + exponent * math.log10(600.0)
            self.assertLess(abs(constant.log10_C - expected), 1e-12 * expected)
            self.assertAlmostEqual(constant.log10_kappa_bound, -2.0 * expected, delta=1e-9 * expected)

    def test_linear_growth_in_R(self):
        steps = [gj_constant(1.0, 0.25, R + 1.0).log10_C - gj_constant(1.0, 0.25, R).log10_C for R in (1, 2, 3, 7)]
        for step in steps:
            self.assertAlmostEqual(step, steps[0], places=8)
        self.assertEqual(gj_naive_annulus(1.0, 0.25, 3.0), gj_constant(1.0, 0.25, 4.0).log10_C)

    def test_order_term(self):
        self.assertAlmostEqual(gj_exponent(2.0, 1.0) - gj_exponent(0.0, 1.0), 2.0 * math.log(3.0) / math.log(2.0))

    def test_bound_underflows_to_zero(self):
        self.assertEqual(gj_constant(0.0, 0.5, 1.0).kappa_lower_bound, 0.0)

    def test_rejects_bad_parameters(self):
        with self.assertRaises(ConcentrationError):
            gj_constant(-0.25, 0.5, 1.0)
        with self.assertRaises(ConcentrationError):
            gj_constant(0.0, 0.0, 1.0)
        with self.assertRaises(ConcentrationError):
            gj_constant(0.0, 0.5, 0.0)


class SweepResultTests(SimpleTestCase):
    def setUp(self):
        entries = [
            SweepEntry(R=4.0, kappa=0.30, tail_bound=1e-3, band_dim=16, t_max=48.0, positions=(4.0,)),
            SweepEntry(R=8.0, kappa=0.44, tail_bound=1e-3, band_dim=16, t_max=48.0, positions=(8.0,)),
            SweepEntry(R=16.0, kappa=0.46, tail_bound=1e-3, band_dim=16, t_max=48.0, positions=(16.0,)),
            SweepEntry(R=32.0, kappa=0.47, tail_bound=1e-3, band_dim=16, t_max=48.0, positions=(32.0,)),
        ]
        self.result = SweepResult(entries=entries, metadata={"alpha": 0.5, "seed": 1})

    def test_summary_and_plateau(self):
        summary = self.result.summary()
        self.assertEqual(summary["min_kappa"], 0.30)
        self.assertAlmostEqual(summary["ratio"], 0.47 / 0.30)
        self.assertEqual(summary["plateau_start"], 8.0)

    def test_json_and_csv(self):
        payload = json.loads(self.result.to_json())
        self.assertEqual(payload["metadata"]["seed"], 1)
        self.assertEqual(len(payload["entries"]), 4)
        self.assertEqual(payload["entries"][1]["positions"], [8.0])
        rows = list(csv.DictReader(io.StringIO(self.result.to_csv())))
        self.assertEqual(float(rows[2]["kappa"]), 0.46)
        self.assertEqual(rows[0]["converged"], "")
        self.assertEqual(rows[0]["envelope_tail"], "")
        self.assertEqual(self.result.to_csv(), self.result.to_csv())
