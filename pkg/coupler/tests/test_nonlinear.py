import dataclasses

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from coupler.exceptions import ConfigError, ParameterError, RegimeError, UndefinedD3Error
from coupler.records import MomentSet, ScenarioConfig
from coupler.services.linear_service import Channel, CommutatorVariant, LinearCouplerService
from coupler.services.meanfield_service import MeanFieldService
from coupler.services.nonlinear_service import NonlinearAnalyticsService, Variant, expm1_i
from coupler.services.oracle_service import FockOracleService
from coupler.services.params_service import CouplerParams, ParamsService
from coupler.services.sweep_service import SweepService

NAS = NonlinearAnalyticsService


def _constants(j, kappa=1.0):
    return ParamsService.derive_constants(CouplerParams(kappa, j))


class CoherentPhaseMomentTests(SimpleTestCase):
    def test_matches_fock_summation(self):
        alpha = 1.2 + 0.5j
        for theta in (0.0, 0.7, -2.1):
            for m in (0, 1, 2):
                self.assertAlmostEqual(
                    NAS.coherent_phase_moment(alpha, theta, m),
                    FockOracleService.phase_moment_by_summation(alpha, theta, m),
                    places=10,
                )

    def test_rejects_fractional_order(self):
        with self.assertRaises(ParameterError):
            NAS.coherent_phase_moment(1.0, 0.1, 1.5)

    def test_expm1_i_keeps_small_angles(self):
        self.assertAlmostEqual(expm1_i(1e-12), 1e-12j, delta=1e-24)
        self.assertAlmostEqual(expm1_i(np.pi), -2.0, places=14)


class NormalizedModeTests(SimpleTestCase):
    def test_reproduces_growing_amplitude(self):
        for j in (0.1, 0.6, 0.9):
            dc = _constants(j)
            mode = NAS.normalized_mode(dc, 1.5 - 0.2j)
            _, o2 = LinearCouplerService.mode_amplitudes(dc, 1.5 - 0.2j)
            self.assertAlmostEqual(abs(mode.alpha_tilde) ** 2 * mode.zeta1, abs(o2) ** 2, places=12)

    def test_regular_as_coupling_vanishes(self):
        mode = NAS.normalized_mode(_constants(1e-12), 1.0)
        self.assertAlmostEqual(mode.alpha_tilde, -1j, places=10)

    def test_pt_regime_is_refused(self):
        with self.assertRaises(RegimeError):
            NAS.normalized_mode(_constants(2.0), 1.0)


class BrokenRegimeMeansTests(SimpleTestCase):
    def setUp(self):
        self.dc = _constants(0.6)
        self.alpha0 = 1.0 + 0.3j

    def test_without_kerr_the_growing_linear_solution_is_recovered(self):
        o1, _ = LinearCouplerService.mode_amplitudes(self.dc, self.alpha0)
        lam = self.dc.lambda_.real
        for t in (0.0, 1.0, 3.0):
            linear = LinearCouplerService.linear_mean_modes(self.dc, self.alpha0, t)
            for variant in (Variant.NOISY, Variant.NOISELESS):
                b = NAS.mean_b(self.dc, 0.0, self.alpha0, t, variant)
                self.assertAlmostEqual(b + o1 * np.exp(-lam * t), linear.mean_b, places=11)
            a = NAS.mean_a(self.dc, 0.0, self.alpha0, t)
            decaying = 0.5 * (1 - self.dc.kappa / lam) * np.exp(-lam * t) * self.alpha0
            self.assertAlmostEqual(a + decaying, linear.mean_a, places=11)

    def test_mean_a_needs_coupling(self):
        with self.assertRaises(ParameterError):
            NAS.mean_a(_constants(0.0), 1e-3, 1.0, 1.0)

    def test_vectorized_mean_b_matches_points(self):
        t = np.linspace(0, 4, 9)
        series = NAS.mean_b(self.dc, 0.02, self.alpha0, t)
        for k in (0, 4, 8):
            point = NAS.mean_b(self.dc, 0.02, self.alpha0, float(t[k]))
            self.assertAlmostEqual(series[k], point, delta=1e-7 * abs(point))

    def test_kerr_phase_is_absent_without_kerr(self):
        phases = NAS.phase_functions(self.dc, 0.0, 2.0)
        self.assertEqual(phases.theta, 0.0)
        self.assertEqual(phases.s_scalar, 0.0)


class Eb1Tests(SimpleTestCase):
    def setUp(self):
        self.dc = _constants(0.6)
        self.chi = 0.05

    def _direct(self, t):
        lam = self.dc.lambda_.real
        zeta1, zeta2 = self.dc.zeta1.real, self.dc.zeta2.real

        def integrand(tau, part):
            theta = zeta1 * zeta2 * self.chi * np.expm1(2 * lam * tau) / (2 * lam)
            value = LinearCouplerService.sigma(self.dc, tau) * np.exp(1j * theta)
            return value.real if part == 0 else value.imag

        re, _ = integrate.quad(integrand, 0, t, args=(0,), epsabs=1e-13, epsrel=1e-12, limit=200)
        im, _ = integrate.quad(integrand, 0, t, args=(1,), epsabs=1e-13, epsrel=1e-12, limit=200)
        return re + 1j * im

    def test_oscillatory_quadrature_matches_direct_integration(self):
        for t in (0.5, 2.0, 4.0):
            value, abserr = NAS.eb1_integral(self.dc, self.chi, t)
            direct = self._direct(t)
            self.assertLess(abs(value - direct), 1e-7 * abs(direct))
            self.assertLess(abserr, 1e-6 * abs(direct))

    def test_series_accumulates_to_pointwise_values(self):
        t = np.linspace(0, 4, 11)
        series = NAS.eb1_series(self.dc, self.chi, 1.0, t)
        for k in (0, 3, 10):
            point = NAS.eb1(self.dc, self.chi, 1.0, float(t[k]))
            self.assertAlmostEqual(series[k], point, delta=1e-7 * max(abs(point), 1e-12))

    def test_vanishes_without_kerr(self):
        self.assertEqual(NAS.eb1(self.dc, 0.0, 1.0, 3.0), 0j)
        self.assertEqual(NAS.eb1_overlap_measure(self.dc, 0.0, 1.0, 3.0), 0.0)

    def test_overlap_measure_series_matches_points(self):
        t = np.linspace(0, 3, 7)
        series = NAS.eb1_overlap_measure(self.dc, self.chi, 2.0, t)
        self.assertEqual(series.shape, (7,))
        point = NAS.eb1_overlap_measure(self.dc, self.chi, 2.0, 3.0)
        self.assertAlmostEqual(series[6], point, delta=1e-7 * point)

    def test_noise_correction_can_be_excluded(self):
        with_eb1 = NAS.mean_b(self.dc, self.chi, 1.0, 3.0)
        without = NAS.mean_b(self.dc, self.chi, 1.0, 3.0, include_eb1=False)
        self.assertAlmostEqual(with_eb1 - without, NAS.eb1(self.dc, self.chi, 1.0, 3.0), places=12)


class PerturbativeCorrectionTests(SimpleTestCase):
    def setUp(self):
        self.dc = _constants(2.0)

    def test_series_matches_pointwise_integrals(self):
        t = np.linspace(0, 3, 7)
        delta_a, delta_b = NAS.perturbative_series(self.dc, 1e-3, 1.0, t)
        for k in (2, 6):
            point_a, point_b = NAS.perturbative_correction(self.dc, 1e-3, 1.0, float(t[k]))
            self.assertAlmostEqual(delta_a[k], point_a, delta=1e-6 * abs(point_a))
            self.assertAlmostEqual(delta_b[k], point_b, delta=1e-6 * abs(point_b))

    def test_coherent_correction_follows_the_classical_field_equations(self):
        chi, alpha0, t_max = 1e-4, 1.0, 1.0
        t_grid = np.linspace(0, t_max, 11)
        base = MeanFieldService.integrate_meanfield(CouplerParams(1.0, 2.0, 0.0), alpha0, t_grid)
        kerr = MeanFieldService.integrate_meanfield(CouplerParams(1.0, 2.0, chi), alpha0, t_grid)
        classical = kerr[-1].beta - base[-1].beta
        _, delta_b = NAS.perturbative_correction(self.dc, chi, alpha0, t_max, wick_noise=False)
        self.assertAlmostEqual(delta_b, classical, delta=1e-3 * abs(classical))

    def test_series_is_pt_only(self):
        with self.assertRaises(RegimeError):
            NAS.perturbative_series(_constants(0.6), 1e-3, 1.0, np.linspace(0, 1, 3))

    def test_growing_model_matches_the_closed_form_to_first_order(self):
        # mean_b(chi) - mean_b(0) - delta_b is second order in chi
        dc, alpha0, t = _constants(0.6), 1.0, 3.0
        residuals = []
        for chi in (1e-3, 5e-4):
            _, delta_b = NAS.perturbative_correction(
                dc, chi, alpha0, t, commutator=CommutatorVariant.GROWING_ONLY,
            )
            change = NAS.mean_b(dc, chi, alpha0, t) - NAS.mean_b(dc, 0.0, alpha0, t)
            self.assertAlmostEqual(change, delta_b, delta=0.02 * abs(delta_b))
            residuals.append(abs(change - delta_b))
        ratio = residuals[0] / residuals[1]
        self.assertGreater(ratio, 3.5)
        self.assertLess(ratio, 4.5)

    def test_growing_model_is_broken_only(self):
        with self.assertRaises(RegimeError):
            NAS.perturbative_correction(self.dc, 1e-3, 1.0, 1.0, commutator=CommutatorVariant.GROWING_ONLY)


class SecondOrderCorrectionTests(SimpleTestCase):
    def setUp(self):
        self.dc = _constants(2.0)

    def test_first_order_part_matches_the_series(self):
        t = np.linspace(0, 3, 7)
        alpha0 = 1.0 + 0.5j
        correction = NAS.second_order_correction(self.dc, 1e-3, alpha0, t)
        delta_a, delta_b = NAS.perturbative_series(self.dc, 1e-3, alpha0, t)
        np.testing.assert_allclose(correction.first_a, delta_a, rtol=1e-6, atol=1e-12)
        np.testing.assert_allclose(correction.first_b, delta_b, rtol=1e-6, atol=1e-12)

    def test_real_input_moves_the_p_quadrature_at_second_order_only(self):
        t = np.linspace(0, 3, 31)
        correction = NAS.second_order_correction(self.dc, 1e-3, 1.0, t)
        first = np.asarray(correction.first_b)
        second = np.asarray(correction.second_b)
        self.assertLess(np.max(np.abs(first.imag)), 1e-12 * np.max(np.abs(first)))
        self.assertGreater(np.max(np.abs(second.imag)), 0.0)

    def test_coherent_part_follows_the_classical_field_equations(self):
        chi, alpha0, t_max = 1e-3, 1.0, 2.0
        t_grid = np.linspace(0, t_max, 21)
        base = MeanFieldService.integrate_meanfield(CouplerParams(1.0, 2.0, 0.0), alpha0, t_grid)
        kerr = MeanFieldService.integrate_meanfield(CouplerParams(1.0, 2.0, chi), alpha0, t_grid)
        classical = kerr[-1].beta - base[-1].beta
        correction = NAS.second_order_correction(self.dc, chi, alpha0, t_max, wick_noise=False)
        first_only = abs(classical - correction.first_b)
        self.assertLess(abs(classical - correction.delta_b), 0.05 * first_only)

    def test_scalar_time_matches_the_grid(self):
        t = np.linspace(0, 2, 5)
        grid = NAS.second_order_correction(self.dc, 1e-3, 1.0, t)
        point = NAS.second_order_correction(self.dc, 1e-3, 1.0, 2.0)
        self.assertAlmostEqual(grid.second_b[-1], point.second_b, delta=1e-7 * abs(point.second_b))

    def test_pt_only(self):
        with self.assertRaises(RegimeError):
            NAS.second_order_correction(_constants(0.6), 1e-3, 1.0, 1.0)


class ChangeRatioTests(SimpleTestCase):
    def test_zero_without_kerr(self):
        t = np.linspace(0, 5, 6)
        np.testing.assert_array_equal(NAS.change_ratio(_constants(0.6), 0.0, 1.0, t), np.zeros(6))
        np.testing.assert_array_equal(NAS.change_ratio(_constants(2.0), 0.0, 1.0, t), np.zeros(6))

    def test_broken_ratio_grows_toward_the_unit_platform(self):
        dc = _constants(0.1)
        t = np.linspace(0, 20, 41)
        ratio = NAS.change_ratio(dc, 1e-9, 1e3, t)
        self.assertLess(ratio[0], 1e-6)
        self.assertTrue(np.all(np.isfinite(ratio)))
        self.assertGreater(ratio.max(), 0.5)

    def test_noiseless_pt_ratio_drops_the_noise_source(self):
        dc = _constants(2.0)
        t = np.linspace(0.5, 3.0, 6)
        noisy = NAS.change_ratio(dc, 1e-3, 1.0, t)
        coherent = NAS.change_ratio(dc, 1e-3, 1.0, t, Variant.NOISELESS)
        self.assertTrue(np.all(noisy > 0))
        self.assertTrue(np.all(coherent > 0))
        self.assertGreater(np.max(np.abs(noisy - coherent) / np.maximum(noisy, coherent)), 0.01)

    def test_pt_surface_is_nonzero_and_smooth(self):
        config = ScenarioConfig(
            name='pt_surface', chi_over_kappa=1e-9, alpha0_re=1e3, variant='NOISY', quantity='change_ratio',
            t_max=10.0, n_samples=2001, sweep={'j_min': 1.5, 'j_max': 3.0, 'j_steps': 4},
        )
        surface = SweepService.sweep(config, workers=1)
        self.assertEqual(surface.meta['nan_cells'], 0)
        self.assertTrue(np.all(np.isfinite(surface.values)))
        np.testing.assert_array_equal(surface.values[:, 0], 0.0)
        for row in surface.values:
            peak = row.max()
            self.assertGreater(peak, 1e-7)
            self.assertLess(np.max(np.abs(np.diff(row))), 0.2 * peak)

    def test_rms_of_linear_quadrature(self):
        dc = _constants(2.0)
        self.assertAlmostEqual(NAS.linear_rms_p_quadrature(dc, 1.0), 2.0 / (np.sqrt(3.0) * np.sqrt(2.0)))


class D3Tests(SimpleTestCase):
    def test_coherent_product_state_is_on_the_boundary(self):
        a, b = 1.3 + 0.2j, -0.4j
        moments = MomentSet(a, b, abs(a) ** 2, abs(b) ** 2, a * b, bb=b * b)
        self.assertAlmostEqual(NAS.d3(moments), 0.0, places=12)

    def test_strong_pair_correlation_is_negative(self):
        self.assertAlmostEqual(NAS.d3(MomentSet(0j, 0j, 1.0, 1.0, 1.5 + 0j)), -1.25, places=12)

    def test_thermal_noise_is_positive(self):
        self.assertGreater(NAS.d3(MomentSet(1.0, 1.0, 2.0, 2.0, 1.0)), 0.0)

    def test_undefined_without_photons(self):
        with self.assertRaises(UndefinedD3Error):
            NAS.d3(MomentSet(0j, 0j, 0.0, 1.0, 0j))

    def test_broken_regime_series(self):
        dc = _constants(0.9)
        t = np.linspace(1, 10, 10)
        series = NAS.moments_series(dc, 1e-9, 1e3, t)
        d3 = NAS.d3_series(series)
        self.assertEqual(d3.shape, (10,))
        self.assertTrue(np.all(np.isfinite(d3)))
        point = NAS.moments(dc, 1e-9, 1e3, float(t[4]))
        self.assertAlmostEqual(NAS.d3(point), d3[4], delta=1e-6)

    def test_cumulants_agree_with_raw_moments_without_spontaneous_photons(self):
        dc = _constants(0.6)
        moments = NAS.moments(dc, 0.05, 2.0, 2.0, Variant.NOISELESS)
        self.assertTrue(moments.has_fluctuations)
        raw = dataclasses.replace(moments, fluct_a=None, fluct_b=None, fluct_ab=None)
        self.assertLess(NAS.d3(moments), -1e-3)
        self.assertAlmostEqual(NAS.d3(moments), NAS.d3(raw), delta=1e-9)

    def test_second_moment_splits_into_mean_and_cumulant(self):
        dc = _constants(0.6)
        series = NAS.moments_series(dc, 0.05, 2.0, np.linspace(0, 3, 7))
        b = series.column('b')
        ratio = series.column('a') / b
        np.testing.assert_allclose(series.column('bb'), b ** 2 + series.column('fluct_ab') / ratio, rtol=1e-9)
        np.testing.assert_allclose(series.column('fluct_a'), np.abs(ratio) ** 2 * series.column('fluct_b'), rtol=1e-12)

    def test_partial_cumulants_are_refused(self):
        with self.assertRaises(ConfigError):
            MomentSet(1.0, 1.0, 2.0, 2.0, 1.0, fluct_a=1.0)


class EntanglementWindowTests(SimpleTestCase):
    """D3 for J = 0.1 and 0.9 at chi = 1e-9, alpha0 = 1e3 over 0 <= kappa t <= 20."""
    NEGATIVITY_FLOOR = -1e-13

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        t = np.linspace(0, 20, 2001)
        cls.t = t
        cls.d3 = {}
        for j in (0.1, 0.9):
            dc = _constants(j)
            for variant in (Variant.NOISY, Variant.NOISELESS):
                series = NAS.moments_series(dc, 1e-9, 1e3, t, variant)
                cls.d3[j, variant] = NAS.d3_series(series)

    def _window(self, j, variant):
        below = np.nonzero(self.d3[j, variant] < self.NEGATIVITY_FLOOR)[0]
        self.assertGreater(below.size, 0, f"no negative D3 for J={j} {variant.value}")
        first, last = below[0], below[-1]
        self.assertEqual(below.size, last - first + 1, "negative samples are not one window")
        return first, last

    def test_each_case_has_one_finite_negative_window(self):
        for (j, variant), d3 in self.d3.items():
            with self.subTest(j=j, variant=variant.value):
                self.assertTrue(np.all(np.isfinite(d3)))
                first, last = self._window(j, variant)
                self.assertLess(last, self.t.size - 1)
                self.assertGreater(d3[-1], 0.0)

    def test_noise_widens_the_window(self):
        for j in (0.1, 0.9):
            noisy = self._window(j, Variant.NOISY)
            coherent = self._window(j, Variant.NOISELESS)
            self.assertGreater(self.t[noisy[1]] - self.t[noisy[0]], self.t[coherent[1]] - self.t[coherent[0]])

    def test_strong_coupling_window_opens_at_modest_gain(self):
        first, _ = self._window(0.9, Variant.NOISY)
        lam = _constants(0.9).lambda_.real
        self.assertLessEqual(np.exp(lam * self.t[first]), 15.0)

    def test_weak_coupling_window_positions(self):
        first, last = self._window(0.1, Variant.NOISELESS)
        self.assertAlmostEqual(self.t[first], 4.80, delta=0.1)
        self.assertAlmostEqual(self.t[last], 5.91, delta=0.1)


class AcceleratingOscillationTests(SimpleTestCase):
    """Loss-channel P quadrature for J = 0.1, chi = 1e-9, alpha0 = 1e3."""

    def setUp(self):
        self.dc = _constants(0.1)
        self.chi, self.alpha0 = 1e-9, 1e3

    def test_follows_the_linear_coupler_early_on(self):
        t = np.linspace(0, 5, 51)
        kerr = NAS.quadrature_mean(NAS.mean_b(self.dc, self.chi, self.alpha0, t), np.pi / 2)
        linear = NAS.quadrature_mean(NAS.mean_b(self.dc, 0.0, self.alpha0, t), np.pi / 2)
        np.testing.assert_allclose(kerr, linear, rtol=1e-2)

    def test_zero_crossings_come_ever_faster(self):
        t = np.linspace(10.0, 12.5, 25001)
        p = NAS.quadrature_mean(NAS.mean_b(self.dc, self.chi, self.alpha0, t, include_eb1=False), np.pi / 2)
        k = np.nonzero(np.sign(p[:-1]) * np.sign(p[1:]) < 0)[0]
        crossings = t[k] - p[k] * (t[k + 1] - t[k]) / (p[k + 1] - p[k])
        intervals = np.diff(crossings)
        self.assertGreater(intervals.size, 20)
        self.assertTrue(np.all(np.diff(intervals) < 0))

    def test_coherence_is_lost_while_photons_keep_growing(self):
        early, late = 12.0, 14.5
        mean_early = abs(NAS.mean_b(self.dc, self.chi, self.alpha0, early))
        mean_late = abs(NAS.mean_b(self.dc, self.chi, self.alpha0, late))
        self.assertLess(mean_late, 1e-6 * mean_early)
        n_early = NAS.photon_number(self.dc, self.chi, self.alpha0, Channel.B, early)
        n_late = NAS.photon_number(self.dc, self.chi, self.alpha0, Channel.B, late)
        self.assertGreater(n_late, 100 * n_early)

    def test_decoherence_envelope_is_the_overlap(self):
        t = np.linspace(1, 14, 27)
        linear = np.abs(NAS.mean_b(self.dc, 0.0, self.alpha0, t))
        x = abs(NAS.normalized_mode(self.dc, self.alpha0).alpha_tilde) ** 2
        for variant in (Variant.NOISY, Variant.NOISELESS):
            theta = NAS.phase_functions(self.dc, self.chi, t, variant).theta
            ratio = np.abs(NAS.mean_b(self.dc, self.chi, self.alpha0, t, variant, include_eb1=False)) / linear
            # the exponent is x (cos theta - 1) with x near 1e6, so rounding reaches x * eps
            np.testing.assert_allclose(ratio, np.exp(x * (np.cos(theta) - 1)), rtol=1e-8, atol=1e-200)
            self.assertTrue(np.all(ratio <= 1.0 + 1e-12))
        overlap = np.abs(NAS.overlap_factor(self.dc, self.chi, self.alpha0, t))
        noisy = np.abs(NAS.mean_b(self.dc, self.chi, self.alpha0, t, include_eb1=False))
        np.testing.assert_allclose(noisy, linear * overlap, rtol=1e-10)


class NoiseWeightTests(SimpleTestCase):
    def test_stronger_kerr_moves_the_peak_earlier_without_raising_it(self):
        dc = _constants(0.5)
        weak_t = np.linspace(0, 14, 1401)
        strong_t = np.linspace(0, 8, 801)
        weak = NAS.eb1_overlap_measure(dc, 1e-9, 1e3, weak_t)
        strong = NAS.eb1_overlap_measure(dc, 1e-5, 1e3, strong_t)
        for values in (weak, strong):
            self.assertTrue(np.all(np.isfinite(values)))
            self.assertLess(values.max(), 1.0)
            # support ends inside the window
            self.assertLess(values[-1], 1e-6 * values.max())
        weak_peak, strong_peak = weak_t[np.argmax(weak)], strong_t[np.argmax(strong)]
        self.assertAlmostEqual(weak_peak, 11.1, delta=0.3)
        self.assertAlmostEqual(strong_peak, 5.8, delta=0.3)
        self.assertLessEqual(strong.max(), 2 * weak.max())
        self.assertGreater(strong.max(), 0.5 * weak.max())
