import csv
import io
import math

import numpy as np
from django.test import SimpleTestCase

from apps.damped_wave.models import DampedWaveConfig, DampedWaveConvergenceError, DampedWaveError, EnergyTrace
from apps.damped_wave.simulation import (
    bessel_zeros,
    build_generator,
    constant_damping_abscissa,
    evolve,
    fit_decay,
    initial_data,
    polynomial_rate_floor,
    spectral_abscissa,
    wave_horizon,
)
from apps.damped_wave.study import study
from apps.measure.models import RadialSet


def blocks(fraction=0.5):
    return RadialSet([(0.0, fraction)], period=1.0)


class ConfigTests(SimpleTestCase):
    def test_rejects_line_and_bad_values(self):
        with self.assertRaises(DampedWaveError):
            DampedWaveConfig(d=1, s=2.0, E=blocks(), c0=1.0)
        with self.assertRaises(DampedWaveError):
            DampedWaveConfig(d=3, s=0.0, E=blocks(), c0=1.0)
        with self.assertRaises(DampedWaveError):
            DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=-1.0)
        with self.assertRaises(DampedWaveError):
            DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=1.0, L=10.0)
        with self.assertRaises(DampedWaveError):
            DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=1.0, modes=100000)

    def test_dict_round_trip_rejects_unknown(self):
        config = DampedWaveConfig(d=2, s=1.0, E=blocks(), c0=0.5, modes=16)
        self.assertEqual(DampedWaveConfig.from_dict(config.to_dict()).to_dict(), config.to_dict())
        payload = config.to_dict()
        payload["gamma"] = 1.0
        with self.assertRaises(DampedWaveError):
            DampedWaveConfig.from_dict(payload)


class ZeroTests(SimpleTestCase):
    def test_order_zero(self):
        zeros = bessel_zeros(0.0, 3)
        np.testing.assert_allclose(zeros, [2.404825557695773, 5.520078110286311, 8.653727912911013], rtol=1e-12)

    def test_half_order_zeros_are_multiples_of_pi(self):
        np.testing.assert_allclose(bessel_zeros(0.5, 40), math.pi * np.arange(1, 41), rtol=1e-12)


class GeneratorTests(SimpleTestCase):
    def test_multiplier_and_damping_operator(self):
        generator = build_generator(DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=0.7, modes=32))
        np.testing.assert_allclose(generator.Lambda, generator.rho**2 + 1.0, rtol=1e-15)
        self.assertTrue(np.all(np.diff(generator.Lambda) > 0))
        self.assertGreaterEqual(generator.Lambda[0], 1.0)
        np.testing.assert_array_equal(generator.Gamma, generator.Gamma.T)
        eigenvalues = np.linalg.eigvalsh(generator.Gamma)
        self.assertGreaterEqual(eigenvalues[0], -1e-12)
        self.assertLessEqual(eigenvalues[-1], 0.7 * (1.0 + 1e-8))

    def test_undamped_spectrum(self):
        generator = build_generator(DampedWaveConfig(d=3, s=1.0, E=blocks(), c0=0.0, modes=24))
        values = np.linalg.eigvals(generator.block_form())
        np.testing.assert_allclose(values.real, 0.0, atol=1e-10)
        expected = np.sort(np.concatenate((np.sqrt(generator.Lambda), -np.sqrt(generator.Lambda))))
        np.testing.assert_allclose(np.sort(values.imag), expected, atol=1e-10)
        self.assertLess(abs(spectral_abscissa(generator)), 1e-10)

    def test_constant_damping_closed_form(self):
        generator = build_generator(DampedWaveConfig(d=3, s=2.0, E=RadialSet.half_line(), c0=1.0, modes=32))
        np.testing.assert_allclose(generator.Gamma, np.eye(32), atol=1e-8)
        self.assertAlmostEqual(constant_damping_abscissa(generator), -0.5, places=12)
        self.assertLess(abs(spectral_abscissa(generator) - constant_damping_abscissa(generator)), 1e-6)

    def test_energy_form_shares_spectrum(self):
        generator = build_generator(DampedWaveConfig(d=2, s=1.5, E=blocks(), c0=0.8, modes=16))
        energy = np.sort_complex(np.linalg.eigvals(generator.energy_form()))
        block = np.sort_complex(np.linalg.eigvals(generator.block_form()))
        np.testing.assert_allclose(energy, block, atol=1e-9)


class EvolutionTests(SimpleTestCase):
    def test_undamped_energy_is_conserved(self):
        config = DampedWaveConfig(d=3, s=1.0, E=blocks(), c0=0.0, modes=48, t_final=100.0, output_dt=0.5)
        generator = build_generator(config)
        trace = evolve(generator, initial_data(generator, seed=4))
        self.assertAlmostEqual(trace.energies[0], 1.0, places=12)
        self.assertLess(np.max(np.abs(trace.energies - trace.energies[0])) / trace.energies[0], 1e-10)

    def test_single_mode_oscillates(self):
        config = DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=0.0, modes=12, t_final=20.0, output_dt=0.1)
        generator = build_generator(config)
        w0 = np.zeros(12)
        w0[3] = 1.0
        trace = evolve(generator, (w0, np.zeros(12)), keep_states=True)
        omega = math.sqrt(generator.Lambda[3])
        np.testing.assert_allclose(trace.states[:, 3], math.sqrt(generator.Lambda[3]) * np.cos(omega * trace.times), atol=1e-10)
        np.testing.assert_allclose(trace.energies, trace.energies[0], rtol=1e-10)

    def test_constant_damping_rate(self):
        config = DampedWaveConfig(d=3, s=2.0, E=RadialSet.half_line(), c0=1.0, modes=32, t_final=200.0, output_dt=0.25)
        generator = build_generator(config)
        trace = evolve(generator, initial_data(generator, seed=8))
        self.assertLessEqual(trace.max_relative_increase(), 1e-8)
        fitted = fit_decay(trace, "exp")
        expected = -constant_damping_abscissa(generator)
        self.assertLess(abs(fitted["rate"] - expected), 0.05 * expected)

    def test_rejects_zero_initial_data(self):
        generator = build_generator(DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=1.0, modes=8))
        with self.assertRaises(DampedWaveError):
            evolve(generator, (np.zeros(8), np.zeros(8)))
        with self.assertRaises(DampedWaveError):
            evolve(generator, (np.zeros(7), np.zeros(8)))


class DecayFitTests(SimpleTestCase):
    def test_exact_exponential(self):
        t = np.linspace(0.0, 10.0, 201)
        trace = EnergyTrace(times=t, energies=np.exp(-3.0 * t))
        self.assertAlmostEqual(fit_decay(trace, "exp")["rate"], 3.0, delta=1e-6)

    def test_exact_polynomial(self):
        t = np.linspace(0.0, 50.0, 201)
        trace = EnergyTrace(times=t, energies=(1.0 + t) ** -0.5)
        record = fit_decay(trace, "poly")
        self.assertAlmostEqual(record["rate"], 0.5, delta=1e-6)
        self.assertAlmostEqual(record["r_squared"], 1.0, places=10)

    def test_rejects_short_and_growing_traces(self):
        t = np.linspace(0.0, 1.0, 10)
        with self.assertRaises(DampedWaveError):
            fit_decay(EnergyTrace(times=t, energies=np.exp(-t)), "exp")
        t = np.linspace(0.0, 20.0, 100)
        with self.assertRaises(DampedWaveConvergenceError):
            fit_decay(EnergyTrace(times=t, energies=1.0 + 0.1 * np.sin(t)), "exp")
        with self.assertRaises(DampedWaveError):
            fit_decay(EnergyTrace(times=t, energies=np.exp(-t)), "linear")

    def test_csv_columns(self):
        t = np.linspace(0.0, 1.0, 4)
        rows = list(csv.reader(io.StringIO(EnergyTrace(times=t, energies=np.exp(-t)).to_csv())))
        self.assertEqual(rows[0], ["t", "E", "logE"])
        self.assertAlmostEqual(float(rows[2][2]), -t[1], places=14)


class DensityDampingTests(SimpleTestCase):
    def test_abscissa_negative_and_stable(self):
        coarse = spectral_abscissa(DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=1.0, modes=128))
        fine = spectral_abscissa(DampedWaveConfig(d=3, s=2.0, E=blocks(), c0=1.0, modes=256))
        self.assertLess(coarse, 0.0)
        self.assertLess(fine, 0.0)
        self.assertLessEqual(abs(coarse - fine), 0.05 * abs(fine))

    def test_larger_damping_set_does_not_raise_abscissa(self):
        quarter = spectral_abscissa(DampedWaveConfig(d=3, s=2.0, E=blocks(0.25), c0=0.2, modes=48))
        half = spectral_abscissa(DampedWaveConfig(d=3, s=2.0, E=blocks(0.5), c0=0.2, modes=48))
        self.assertLessEqual(half, quarter + 1e-9)

    def test_fractional_order_decays_at_least_polynomially(self):
        config = DampedWaveConfig(d=3, s=1.0, E=blocks(), c0=1.0, modes=64, t_final=400.0, output_dt=1.0)
        generator = build_generator(config)
        horizon = wave_horizon(generator)
        self.assertGreater(horizon, config.t_final)
        trace = evolve(generator, initial_data(generator, seed=12))
        record = fit_decay(trace, "poly", window=(0.0, min(config.t_final, horizon)))
        self.assertGreaterEqual(record["rate"], polynomial_rate_floor(1.0) * (1.0 - 0.3))

    def test_study_runs_in_order(self):
        configs = [
            DampedWaveConfig(d=3, s=2.0, E=RadialSet.half_line(), c0=1.0, modes=16, t_final=40.0, output_dt=0.5),
            DampedWaveConfig(d=2, s=1.0, E=blocks(), c0=0.5, modes=16, t_final=40.0, output_dt=0.5),
        ]
        results = study(configs, seed=3, threads=2, use_celery=False)
        self.assertEqual([result["config"]["d"] for result in results], [3, 2])
        self.assertIn("poly", results[1]["fits"])
        self.assertNotIn("poly", results[0]["fits"])
        self.assertEqual(len(results[0]["trace"]), 81)
        again = study(configs[:1], seed=3, use_celery=True)
        np.testing.assert_array_equal(again[0]["trace"].energies, results[0]["trace"].energies)
