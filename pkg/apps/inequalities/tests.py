import csv
import io
import json
import math

import numpy as np
from django.test import SimpleTestCase

from apps.inequalities.bernstein import bernstein_ratio, bernstein_spectral_ratio, bump_profile
from apps.inequalities.decomposition import decomposition_residual
from apps.inequalities.models import ExpPolynomial, InequalityError
from apps.inequalities.nazarov_turan import (
    adversarial_nazarov_turan,
    calibrate_nazarov_turan,
    nazarov_turan_ratio,
    random_subset,
    trial_seeds,
)
from apps.measure.models import RadialSet
from apps.transform.models import BandProfile


class ExpPolynomialTests(SimpleTestCase):
    def test_evaluation(self):
        r = ExpPolynomial([0.5, -1.0], [[1.0, 2.0], [1j]])
        x = np.array([0.0, 0.3, 1.7])
        expected = (1.0 + 2.0 * x) * np.exp(1j * np.pi * x) + 1j * np.exp(-2j * np.pi * x)
        np.testing.assert_allclose(r(x), expected, atol=1e-14)
        self.assertEqual((r.N, r.M), (2, 2))

    def test_validation(self):
        with self.assertRaises(InequalityError):
            ExpPolynomial([1.0, 1.0], [[1.0], [2.0]])
        with self.assertRaises(InequalityError):
            ExpPolynomial([1.0], [[0.0, 0.0]])
        with self.assertRaises(InequalityError):
            ExpPolynomial([1.0, 2.0], [[1.0]])


class NazarovTuranTests(SimpleTestCase):
    def test_pure_exponential(self):
        r = ExpPolynomial([3.7], [[1.0]])
        E = RadialSet([(0.1, 0.35), (0.6, 0.8)])
        ratio, bound = nazarov_turan_ratio(r, (0.0, 1.0), E, p=2.0)
        self.assertAlmostEqual(ratio, math.sqrt(1.0 / 0.45), places=12)
        self.assertAlmostEqual(bound, (20.0 / 0.45) ** 0.5, places=9)

    def test_scale_covariance(self):
        rng = np.random.default_rng(11)
        r = ExpPolynomial.random(2, 2, rng)
        E = random_subset((0.0, 1.0), 0.5, 8, rng)
        scaled_E = RadialSet([(3.0 * a, 3.0 * b) for a, b in E.intervals])
        for p in (1.0, 2.0, 3.0):
            ratio, _ = nazarov_turan_ratio(r, (0.0, 1.0), E, p)
            scaled, _ = nazarov_turan_ratio(r.rescaled(3.0), (0.0, 3.0), scaled_E, p)
            self.assertLess(abs(ratio - scaled), 1e-9 * ratio)

    def test_rejects_null_set_and_bad_p(self):
        r = ExpPolynomial([1.0], [[1.0]])
        with self.assertRaises(InequalityError):
            nazarov_turan_ratio(r, (0.0, 1.0), RadialSet([(2.0, 3.0)]))
        with self.assertRaises(InequalityError):
            nazarov_turan_ratio(r, (0.0, 1.0), RadialSet([(0.0, 0.5)]), p=0.5)

    def test_calibration_within_bound(self):
        calibration = calibrate_nazarov_turan(1000, 2, 2, p=2.0, seed=5, threads=4)
        self.assertEqual(len(calibration.trials), 1000)
        self.assertEqual(calibration.violations, 0)
        self.assertLessEqual(calibration.C0_needed, 20.0)
        for trial in calibration.trials:
            self.assertTrue(math.isfinite(trial.ratio))
            self.assertAlmostEqual(trial.set_measure, 0.5, places=12)

    def test_calibration_is_reproducible(self):
        first = calibrate_nazarov_turan(20, 2, 1, seed=3)
        second = calibrate_nazarov_turan(20, 2, 1, seed=3, threads=3)
        self.assertEqual(first.to_csv(), second.to_csv())
        self.assertEqual(first.sidecar_json(), second.sidecar_json())
        self.assertEqual(trial_seeds(3, 20), [trial.seed for trial in first.trials])

    def test_trial_log_format(self):
        calibration = calibrate_nazarov_turan(5, 1, 2, seed=9)
        rows = list(csv.reader(io.StringIO(calibration.to_csv())))
        self.assertEqual(rows[0], ["seed", "N", "M", "interval_length", "set_measure", "ratio", "bound"])
        self.assertEqual(len(rows), 6)
        sidecar = json.loads(calibration.sidecar_json())
        self.assertEqual(sidecar["trials"], 5)
        self.assertEqual(sidecar["root_seed"], 9)

    def test_adversarial_search(self):
        E = RadialSet([(0.35, 0.65)])
        centered = ExpPolynomial([1.5], [[-0.5, 1.0]])
        start_ratio, bound = nazarov_turan_ratio(centered, (0.0, 1.0), E)
        self.assertAlmostEqual(start_ratio, math.sqrt((1.0 / 12.0) / (2.0 * 0.15**3 / 3.0)), places=8)
        ratio, best = adversarial_nazarov_turan(1, 2, (0.0, 1.0), E, initial=centered, restarts=2, maxiter=600, seed=1)
        self.assertGreaterEqual(ratio, start_ratio * (1.0 - 1e-12))
        self.assertLessEqual(ratio, bound)
        self.assertEqual(best.N, 1)


class BernsteinTests(SimpleTestCase):
    def test_degenerate_order(self):
        profile = bump_profile(0.5, (1.0, 2.0), coeffs=[1.0, 0.3])
        self.assertAlmostEqual(bernstein_ratio(0.5, profile, 2.0, 0).ratio, 1.0, places=12)

    def test_smooth_bump(self):
        profile = bump_profile(0.5, (0.5, 1.5))
        result = bernstein_ratio(0.5, profile, 2.0, 1)
        self.assertLessEqual(result.ratio, 1.0 + 1e-3)
        self.assertLess(abs(result.ratio - result.spectral_ratio), 1e-6)

    def test_seeded_profiles(self):
        rng = np.random.default_rng(2024)
        for trial in range(20):
            alpha = (0.5, 1.5)[trial % 2]
            R = (1.0, 2.0, 4.0)[trial % 3]
            coeffs = rng.normal(size=4) + 1j * rng.normal(size=4)
            profile = bump_profile(alpha, (R - 1.0, R), coeffs=coeffs)
            for k in (1, 2):
                result = bernstein_ratio(alpha, profile, R, k)
                self.assertLessEqual(result.ratio, 1.0 + 1e-3, msg=f"trial {trial}, k={k}")
                self.assertLess(abs(result.ratio - result.spectral_ratio), 1e-6, msg=f"trial {trial}, k={k}")

    def test_edge_concentration(self):
        R = 3.0
        centred = bernstein_ratio(1.5, bump_profile(1.5, (2.0, 3.0), width=0.4), R, 1, t_max=120.0)
        edge = bernstein_ratio(1.5, bump_profile(1.5, (2.0, 3.0), center=2.8, width=0.4), R, 1, t_max=120.0)
        self.assertGreater(edge.ratio, centred.ratio)
        self.assertLessEqual(edge.ratio, 1.0 + 1e-3)

    def test_homogeneity(self):
        profile = bump_profile(0.5, (1.0, 2.0), coeffs=[1.0, -0.4, 0.2])
        base = bernstein_ratio(0.5, profile, 2.0, 2).ratio
        scaled = bernstein_ratio(0.5, profile.scaled(-3.0 + 2.0j), 2.0, 2).ratio
        self.assertLess(abs(base - scaled), 1e-12 * base)

    def test_validation(self):
        profile = bump_profile(0.5, (3.0, 4.0))
        with self.assertRaises(InequalityError):
            bernstein_ratio(0.5, profile, 3.5, 1)
        with self.assertRaises(InequalityError):
            bernstein_ratio(0.5, profile, 4.0, 5)
        with self.assertRaises(InequalityError):
            bernstein_spectral_ratio(0.5, BandProfile(0.5, [(0.0, 1.0)], 16), 1.0, 1)


class DecompositionResidualTests(SimpleTestCase):
    def test_low_orders(self):
        s = np.linspace(1.0, 100.0, 400)
        self.assertLess(decomposition_residual(0, s), 1e-12)
        self.assertLess(decomposition_residual(1, s), 1e-12)

    def test_up_to_order_four(self):
        s = np.linspace(1.0, 50.0, 200)
        for m in range(5):
            self.assertLess(decomposition_residual(m, s), 1e-10, msg=f"m={m}")

    def test_no_growth_in_s(self):
        near = decomposition_residual(3, np.linspace(1.0, 10.0, 50))
        far = decomposition_residual(3, np.linspace(10.0, 50.0, 50))
        self.assertLessEqual(far, max(near, 1e-13))

    def test_validation(self):
        with self.assertRaises(InequalityError):
            decomposition_residual(7, [2.0])
        with self.assertRaises(InequalityError):
            decomposition_residual(2, [0.5, 2.0])
