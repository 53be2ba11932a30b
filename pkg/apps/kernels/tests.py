import math

import numpy as np
from django.test import SimpleTestCase

from apps.kernels.calibration import calibrate, j_asymptotic
from apps.kernels.decomposition import decompose_exponentials
from apps.kernels.evaluation import j_derivative, j_eval, j_poisson, j_tilde, seam_point
from apps.kernels.models import (
    BesselOrder,
    InvalidOrderError,
    KernelCalibration,
    KernelError,
    SeriesRadiusError,
)
from apps.kernels.series import j_reference, j_series


def envelope_scale(alpha, x):
    return (1.0 + np.asarray(x, dtype=float)) ** (-alpha - 0.5)


class BesselOrderTests(SimpleTestCase):
    def test_half_integer_constants(self):
        order = BesselOrder(0.5)
        self.assertEqual(order.m, 0)
        self.assertAlmostEqual(order.A_alpha, 1.0, places=14)
        self.assertAlmostEqual(order.delta, math.pi / 2, places=14)
        self.assertEqual(BesselOrder(3.5).m, 3)

    def test_general_order_has_no_m(self):
        self.assertIsNone(BesselOrder(0.7).m)
        self.assertIsNone(BesselOrder(0.0).m)
        self.assertFalse(BesselOrder(-0.25).is_half_integer)

    def test_rejects_orders_at_or_below_minus_half(self):
        for alpha in (-0.5, -0.6, float("nan")):
            with self.assertRaises(InvalidOrderError):
                BesselOrder(alpha)


class SeriesTests(SimpleTestCase):
    def test_value_at_origin_is_exactly_one(self):
        self.assertEqual(j_series(0.7, 0.0, 1e-14), 1.0)

    def test_half_order_closed_form(self):
        self.assertAlmostEqual(j_series(0.5, 2.0, 1e-16), math.sin(2.0) / 2.0, places=14)

    def test_near_minus_half_approaches_cosine(self):
        value = j_series(-0.499, 1.0, 1e-16)
        self.assertAlmostEqual(value, math.cos(1.0), delta=5e-3)
        self.assertAlmostEqual(value, j_reference(-0.499, 1.0), places=13)

    def test_rejects_bad_inputs(self):
        with self.assertRaises(SeriesRadiusError):
            j_series(0.0, 25.0, 1e-14)
        with self.assertRaises(KernelError):
            j_series(0.0, 1.0, 0.0)

    def test_radius_grows_with_order(self):
        self.assertEqual(BesselOrder(0.0).reliability_radius, 20.0)
        self.assertEqual(BesselOrder(5.0).reliability_radius, 30.0)
        self.assertAlmostEqual(j_series(5.0, 28.0), j_reference(5.0, 28.0), delta=1e-7)


class DispatchTests(SimpleTestCase):
    def test_normalization_at_origin(self):
        for alpha in (-0.25, 0.0, 0.5, 1.3, 4.5):
            self.assertEqual(j_eval(alpha, 0.0), 1.0)

    def test_closed_forms_over_wide_range(self):
        x = np.linspace(0.1, 100.0, 4001)
        half = np.sin(x) / x
        three_halves = 3.0 * (np.sin(x) - x * np.cos(x)) / x**3
        np.testing.assert_array_less(np.abs(j_eval(0.5, x) - half), 1e-10 * envelope_scale(0.5, x))
        np.testing.assert_array_less(np.abs(j_eval(1.5, x) - three_halves), 1e-10 * envelope_scale(1.5, x))

    def test_against_extended_precision_oracle(self):
        for alpha, x in ((2.5, 50.0), (0.0, 37.0), (-0.25, 12.5), (1.3, 400.0)):
            scale = float(envelope_scale(alpha, x))
            self.assertLess(abs(j_eval(alpha, x) - j_reference(alpha, x)), 1e-10 * scale, msg=f"alpha={alpha}")

    def test_seam_continuity(self):
        for alpha in (-0.25, 0.0, 0.5, 1.5, 2.5):
            x0 = seam_point(alpha)
            self.assertLessEqual(x0, BesselOrder(alpha).reliability_radius)
            left, right = j_eval(alpha, x0 - 1e-9), j_eval(alpha, x0 + 1e-9)
            drift = 2e-9 * abs(j_derivative(alpha, x0))
            self.assertLess(abs(left - right), 1e-9 + drift, msg=f"alpha={alpha}")
            for x in (x0, x0 + 1e-6):
                scale = BesselOrder(alpha).A_alpha * x ** (-alpha - 0.5)
                self.assertLess(abs(j_eval(alpha, x) - j_reference(alpha, x)), 1e-9 * scale)

    def test_evenness(self):
        self.assertEqual(j_eval(1.0, -3.0), j_eval(1.0, 3.0))

    def test_poisson_integral_agrees(self):
        for alpha in (0.0, 0.3, 1.5):
            for x in (0.5, 3.0, 12.0):
                self.assertAlmostEqual(j_poisson(alpha, x), j_eval(alpha, x), delta=1e-9)

    def test_derivative_identity(self):
        x = np.linspace(0.2, 60.0, 500)
        expected = (x * np.cos(x) - np.sin(x)) / x**2
        np.testing.assert_allclose(j_derivative(0.5, x), expected, atol=1e-10)


class AsymptoticTests(SimpleTestCase):
    def test_half_order_leading_term(self):
        value, bound = j_asymptotic(0.5, 10.0)
        self.assertAlmostEqual(value, math.sin(10.0) / 10.0, places=14)
        self.assertGreater(bound, 0.0)

    def test_leading_term_phase_zero(self):
        self.assertAlmostEqual(j_tilde(0.5, math.pi), 0.0, places=15)

    def test_leading_term_near_minus_half(self):
        self.assertAlmostEqual(j_tilde(-0.4999, 1.0), math.cos(1.0), delta=1e-3)

    def test_rejects_nonpositive_argument(self):
        with self.assertRaises(KernelError):
            j_tilde(0.5, 0.0)

    def test_calibrated_remainder_bound(self):
        x = np.linspace(5.0, 200.0, 1500)
        for alpha in (0.0, 0.5, 1.5, 2.5):
            reference = j_reference(alpha, x)
            value, bound = j_asymptotic(alpha, x)
            np.testing.assert_array_less(np.abs(reference - value), bound, err_msg=f"alpha={alpha}")

    def test_leading_term_within_bound_of_dispatch(self):
        _, bound = j_asymptotic(1.5, 30.0)
        self.assertLessEqual(abs(j_tilde(1.5, 30.0) - j_eval(1.5, 30.0)), bound)

    def test_envelope_bound(self):
        x = np.random.default_rng(3).uniform(0.0, 1000.0, 4000)
        for alpha in (0.0, 1.5):
            envelope = calibrate(alpha).envelope
            np.testing.assert_array_less(np.abs(j_eval(alpha, x)), envelope * envelope_scale(alpha, x))

    def test_calibration_record_rejects_unknown_fields(self):
        with self.assertRaises(KernelError):
            KernelCalibration.from_json('{"alpha": 0.5, "K": 1.0, "x0": 9.0, "extra": 1}')
        record = KernelCalibration.from_json('{"alpha": 0.5, "K": 0.2, "x0": 9.1}')
        self.assertIsNone(record.envelope)


class DecompositionTests(SimpleTestCase):
    def test_order_zero_coefficients(self):
        decomposition = decompose_exponentials(0)
        self.assertAlmostEqual(decomposition.coeffs[("+", 0)], -0.5j)
        self.assertAlmostEqual(decomposition.coeffs[("-", 0)], 0.5j)
        s = np.linspace(0.5, 40.0, 300)
        np.testing.assert_allclose(decomposition.reconstruct(s).real, np.sin(s) / s, atol=1e-15)

    def test_order_one_closed_form(self):
        s = np.linspace(1.0, 40.0, 300)
        expected = 3.0 * (np.sin(s) - s * np.cos(s)) / s**3
        np.testing.assert_allclose(decompose_exponentials(1).reconstruct(s).real, expected, atol=1e-14)

    def test_order_two_against_series(self):
        decomposition = decompose_exponentials(2)
        for s in (1.0, 5.0, 25.0):
            reference = j_reference(2.5, s)
            self.assertLess(abs(decomposition.reconstruct(s).real - reference), 1e-12 * max(abs(reference), s**-3))

    def test_conjugate_coefficients_and_reality(self):
        s = np.linspace(1.0, 50.0, 400)
        for m in range(7):
            decomposition = decompose_exponentials(m)
            self.assertEqual(decomposition.max_conjugate_defect(), 0.0)
            imaginary = np.abs(decomposition.reconstruct(s).imag)
            np.testing.assert_array_less(imaginary, 1e-14 * decomposition.magnitude(s) + 1e-300)

    def test_rejects_negative_order(self):
        with self.assertRaises(KernelError):
            decompose_exponentials(-1)
