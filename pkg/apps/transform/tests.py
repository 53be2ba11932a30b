import math

import numpy as np
from django.test import SimpleTestCase
from scipy.special import eval_legendre

from apps.kernels.evaluation import j_eval
from apps.measure.density import mu_alpha_interval
from apps.transform.bochner import (
    bochner_reduce,
    direct_norm_squared,
    reduced_norm_squared,
    spherical_norm_squared,
)
from apps.transform.models import (
    BandProfile,
    RadialFunction,
    RadialGrid,
    TransformError,
    UnderResolvedError,
    read_columns,
)
from apps.transform.transform import forward, plancherel_residual, synthesize_bandlimited


def bump(R):
    def g(y):
        u = 2.0 * (np.asarray(y) - R) - 1.0
        inside = np.abs(u) < 1.0
        out = np.zeros_like(u)
        out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return out

    return g


def random_legendre_profile(R, seed, degree=4):
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=degree) + 1j * rng.normal(size=degree)

    def g(y):
        u = 2.0 * (np.asarray(y) - R) - 1.0
        return sum(c * eval_legendre(k, u) for k, c in enumerate(coeffs))

    return g


class GridTests(SimpleTestCase):
    def test_weights_sum_to_interval_measure(self):
        for alpha in (0.0, 0.5, 1.3):
            grid = RadialGrid.build(alpha, 50.0, max_freq=2.0)
            expected = mu_alpha_interval(alpha, 0.0, 50.0)
            self.assertLess(abs(grid.total_measure() - expected), 1e-10 * expected)

    def test_nodes_are_interior_and_increasing(self):
        grid = RadialGrid.build(0.5, 10.0, max_freq=1.0)
        self.assertGreater(grid.nodes[0], 0.0)
        self.assertLess(grid.nodes[-1], 10.0)
        self.assertTrue(np.all(np.diff(grid.nodes) > 0))


class BandProfileTests(SimpleTestCase):
    def test_rejects_bad_bands(self):
        with self.assertRaises(TransformError):
            BandProfile(0.5, [(2.0, 3.5)], 16)
        with self.assertRaises(TransformError):
            BandProfile(0.5, [(2.0, 3.0), (2.5, 3.5)], 16)

    def test_weights_integrate_band_measure(self):
        profile = BandProfile(1.5, [(4.0, 5.0), (9.0, 10.0)], 32)
        expected = mu_alpha_interval(1.5, 4.0, 5.0) + mu_alpha_interval(1.5, 9.0, 10.0)
        self.assertAlmostEqual(float(np.sum(profile.weights)) / expected, 1.0, places=12)

    def test_resolving_resamples_from_source(self):
        profile = BandProfile.from_callable(0.5, [(3.0, 4.0)], bump(3.0), 16)
        fine = profile.resolving(50.0)
        self.assertEqual(fine.band_dim, BandProfile.required_band_dim(50.0))
        self.assertAlmostEqual(fine.norm_squared() / profile.norm_squared(), 1.0, places=3)
        with self.assertRaises(UnderResolvedError):
            BandProfile(0.5, [(3.0, 4.0)], 16, samples=np.ones(16)).resolving(50.0)

    def test_csv_columns(self):
        profile = BandProfile.from_callable(0.5, [(1.0, 2.0)], lambda y: y + 1j, 8)
        text = profile.to_csv()
        self.assertTrue(text.startswith("node,weight,re,im\n"))
        nodes, weights, values = read_columns(text)
        np.testing.assert_array_equal(nodes, profile.nodes)
        np.testing.assert_array_equal(values, profile.samples)
        with self.assertRaises(TransformError):
            read_columns("x,y\n1,2\n")


class ForwardTests(SimpleTestCase):
    def test_zero_function(self):
        grid = RadialGrid.build(0.5, 5.0, max_freq=2.0)
        values = forward(0.5, RadialFunction(grid, np.zeros(len(grid))), [0.0, 0.7, 2.0])
        np.testing.assert_array_equal(values, 0.0)

    def test_gaussian_is_self_reciprocal(self):
        grid = RadialGrid.build(0.5, 8.0, max_freq=3.0)
        f = RadialFunction(grid, np.exp(-math.pi * grid.nodes**2))
        y = np.linspace(0.0, 3.0, 31)
        np.testing.assert_allclose(forward(0.5, f, y).real, np.exp(-math.pi * y**2), atol=1e-10)

    def test_rejects_negative_and_unresolved_frequencies(self):
        grid = RadialGrid.build(0.5, 5.0, max_freq=1.0)
        f = RadialFunction(grid, np.ones(len(grid)))
        with self.assertRaises(TransformError):
            forward(0.5, f, [-1.0])
        with self.assertRaises(UnderResolvedError):
            forward(0.5, f, [10.0])

    def test_peak_near_modulation_frequency(self):
        y0 = 2.0
        grid = RadialGrid.build(0.5, 30.0, max_freq=4.0)
        cutoff = np.exp(-((grid.nodes / 12.0) ** 2))
        f = RadialFunction(grid, j_eval(0.5, 2.0 * math.pi * grid.nodes * y0) * cutoff)
        y = np.linspace(0.5, 3.5, 301)
        peak = y[int(np.argmax(np.abs(forward(0.5, f, y))))]
        self.assertLess(abs(peak - y0), 0.1)


class SynthesisTests(SimpleTestCase):
    def test_zero_profile_gives_zero_function(self):
        grid = RadialGrid.build(0.5, 10.0, max_freq=4.0)
        profile = BandProfile(0.5, [(3.0, 4.0)], BandProfile.required_band_dim(10.0))
        np.testing.assert_array_equal(synthesize_bandlimited(profile, grid).values, 0.0)

    def test_constant_band_against_antiderivative(self):
        R, t_max = 3.0, 20.0
        grid = RadialGrid.build(0.5, t_max, max_freq=R + 1.0)
        profile = BandProfile.from_callable(0.5, [(R, R + 1.0)], np.ones_like, BandProfile.required_band_dim(t_max))
        t = grid.nodes
        a = 2.0 * math.pi * t

        def primitive(y):
            return np.sin(a * y) / a**2 - y * np.cos(a * y) / a

        c = 4.0 * math.pi
        expected = c / a * (primitive(R + 1.0) - primitive(R))
        values = synthesize_bandlimited(profile, grid).values
        np.testing.assert_allclose(values.real, expected, atol=1e-9 * np.max(np.abs(expected)))

    def test_single_node_profile(self):
        grid = RadialGrid.build(0.5, 10.0, max_freq=3.0)
        profile = BandProfile(0.5, [(2.0, 3.0)], BandProfile.required_band_dim(10.0))
        p = 7
        profile.samples[p] = 1.0
        kernel = profile.weights[p] * j_eval(0.5, 2.0 * math.pi * grid.nodes * profile.nodes[p])
        expected = float(np.sum(grid.weights * kernel**2))
        self.assertAlmostEqual(synthesize_bandlimited(profile, grid).norm_squared() / expected, 1.0, places=12)

    def test_linearity(self):
        grid = RadialGrid.build(0.5, 10.0, max_freq=5.0)
        dim = BandProfile.required_band_dim(10.0)
        first = BandProfile.from_callable(0.5, [(4.0, 5.0)], random_legendre_profile(4.0, 1), dim)
        second = BandProfile.from_callable(0.5, [(4.0, 5.0)], random_legendre_profile(4.0, 2), dim)
        combined = BandProfile(0.5, [(4.0, 5.0)], dim, samples=2.0 * first.samples - 3j * second.samples)
        lhs = synthesize_bandlimited(combined, grid).values
        rhs = 2.0 * synthesize_bandlimited(first, grid).values - 3j * synthesize_bandlimited(second, grid).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-13 * np.max(np.abs(rhs)))

    def test_under_resolved_profile(self):
        grid = RadialGrid.build(0.5, 50.0, max_freq=2.0)
        with self.assertRaises(UnderResolvedError):
            synthesize_bandlimited(BandProfile(0.5, [(1.0, 2.0)], 16, samples=np.ones(16)), grid)

    def test_round_trip_at_interior_nodes(self):
        R, t_max = 8.0, 100.0
        grid = RadialGrid.build(0.5, t_max, max_freq=R + 1.0)
        profile = BandProfile.from_callable(0.5, [(R, R + 1.0)], bump(R), BandProfile.required_band_dim(t_max))
        f = synthesize_bandlimited(profile, grid)
        interior = (profile.nodes > R + 0.1) & (profile.nodes < R + 0.9)
        recovered = forward(0.5, f, profile.nodes[interior])
        scale = np.max(np.abs(profile.samples))
        np.testing.assert_allclose(recovered, profile.samples[interior], atol=1e-3 * scale)


class PlancherelTests(SimpleTestCase):
    def test_residual_small_and_halving(self):
        R = 8.0
        for seed in (1, 2, 3):
            g = random_legendre_profile(R, seed)
            residuals = []
            for t_max in (200.0, 400.0):
                grid = RadialGrid.build(0.5, t_max, max_freq=R + 1.0)
                profile = BandProfile.from_callable(0.5, [(R, R + 1.0)], g, BandProfile.required_band_dim(t_max))
                residuals.append(plancherel_residual(profile, grid))
            self.assertLess(residuals[0], 1e-2)
            self.assertGreater(residuals[0] / residuals[1], 2.0 / 1.25)
            self.assertLess(residuals[0] / residuals[1], 2.0 * 1.25)

    def test_zero_profile_rejected(self):
        grid = RadialGrid.build(0.5, 10.0, max_freq=2.0)
        with self.assertRaises(TransformError):
            plancherel_residual(BandProfile(0.5, [(1.0, 2.0)], BandProfile.required_band_dim(10.0)), grid)


class BochnerTests(SimpleTestCase):
    def test_order_mapping(self):
        F = lambda r: r * np.exp(-(r**2))  # noqa: E731
        radial = bochner_reduce(3, 0, F)
        self.assertEqual(radial.alpha_eff, 0.5)
        np.testing.assert_array_equal(radial.g(np.array([0.5, 1.0])), F(np.array([0.5, 1.0])))
        planar = bochner_reduce(2, 1, F)
        self.assertEqual(planar.alpha_eff, 1.0)
        self.assertAlmostEqual(float(planar.g(2.0)), math.exp(-4.0), places=14)

    def test_norm_factorization(self):
        for n, k in ((2, 1), (3, 1), (3, 2)):
            F = lambda r, k=k: r**k * np.exp(-(r**2))  # noqa: E731
            reduction = bochner_reduce(n, k, F)
            direct = direct_norm_squared(n, k, F)
            reduced = reduced_norm_squared(reduction)
            self.assertLess(abs(direct - reduced), 1e-8 * direct, msg=f"n={n}, k={k}")

    def test_spherical_norms(self):
        self.assertAlmostEqual(spherical_norm_squared(2, 3), math.pi)
        self.assertAlmostEqual(spherical_norm_squared(3, 2), 4.0 * math.pi / 5.0)

    def test_rejects_insufficient_vanishing(self):
        with self.assertRaises(TransformError):
            bochner_reduce(3, 2, lambda r: r * np.exp(-(r**2)))
        with self.assertRaises(TransformError):
            bochner_reduce(1, 0, lambda r: np.exp(-(r**2)))
