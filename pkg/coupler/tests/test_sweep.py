import numpy as np
from django.test import SimpleTestCase

from coupler.exceptions import ConfigError, RegimeError
from coupler.records import ScenarioConfig
from coupler.services.nonlinear_service import NonlinearAnalyticsService, Variant
from coupler.services.params_service import CouplerParams, ParamsService
from coupler.services.sweep_service import SweepService


def _config(j_min, j_max, steps, quantity='change_ratio', variant='NOISY', **kwargs):
    fields = dict(
        name='sweep', chi_over_kappa=1e-3, alpha0_re=1.0, variant=variant, quantity=quantity,
        t_max=3.0, n_samples=7, sweep={'j_min': j_min, 'j_max': j_max, 'j_steps': steps},
    )
    fields.update(kwargs)
    return ScenarioConfig(**fields)


class SweepTests(SimpleTestCase):
    def test_single_row_equals_the_scalar_operation(self):
        for j in (0.5, 2.0):
            config = _config(j, j, 1)
            surface = SweepService.sweep(config, workers=1)
            self.assertEqual(surface.values.shape, (1, 7))
            dc = ParamsService.derive_constants(CouplerParams(1.0, j))
            for k in (1, 6):
                expected = NonlinearAnalyticsService.change_ratio(dc, 1e-3, 1.0, float(surface.t_axis[k]), Variant.NOISY)
                self.assertAlmostEqual(surface.values[0, k], expected, delta=1e-6 * abs(expected))

    def test_worker_count_does_not_change_the_surface(self):
        config = _config(0.2, 0.8, 4)
        serial = SweepService.sweep(config, workers=1)
        parallel = SweepService.sweep(config, workers=2)
        np.testing.assert_array_equal(serial.values, parallel.values)
        np.testing.assert_array_equal(serial.reasons, parallel.reasons)

    def test_d3_surface_in_broken_regime(self):
        surface = SweepService.sweep(_config(0.1, 0.9, 3, quantity='d3', t_max=10.0, alpha0_re=1e3, chi_over_kappa=1e-9), workers=1)
        self.assertEqual(surface.meta['regime'], 'BROKEN')
        self.assertTrue(np.all(np.isfinite(surface.values) | (surface.reasons != '')))

    def test_undefined_cells_carry_reason_codes(self):
        config = _config(1.5, 2.0, 2, alpha0_re=0.0, alpha0_im=1.0)
        surface = SweepService.sweep(config, workers=1)
        self.assertTrue(np.all(np.isnan(surface.values)))
        self.assertTrue(np.all(surface.reasons == 'undefined_ratio'))
        self.assertEqual(surface.meta['nan_cells'], 14)

    def test_range_must_stay_in_one_regime(self):
        with self.assertRaises(ConfigError):
            SweepService.sweep(_config(0.5, 1.5, 5))
        with self.assertRaises(ConfigError):
            SweepService.sweep(_config(0.9, 0.9995, 2))

    def test_broken_only_quantities(self):
        with self.assertRaises(RegimeError):
            SweepService.sweep(_config(1.5, 2.0, 2, quantity='d3'))

    def test_only_analytic_variants_sweep(self):
        with self.assertRaises(ConfigError):
            SweepService.sweep(_config(0.2, 0.8, 2, variant='LINEAR'))
        with self.assertRaises(ConfigError):
            SweepService.sweep(_config(0.2, 0.8, 2, quantity='moments'))


class OnsetTimeTests(SimpleTestCase):
    def test_first_crossing(self):
        t = np.linspace(0, 4, 5)
        self.assertEqual(SweepService.onset_time(t, [0.0, 0.5, 0.995, 1.0, 1.0]), 2.0)
        self.assertIsNone(SweepService.onset_time(t, [0.0, np.nan, 0.5, 0.6, 0.7]))

    def test_noiseless_plateau_comes_first_across_the_broken_regime(self):
        onsets = {}
        for variant in ('NOISY', 'NOISELESS'):
            config = _config(
                0.05, 0.95, 20, variant=variant, chi_over_kappa=1e-9, alpha0_re=1e3,
                t_max=20.0, n_samples=2001, include_eb1=False,
            )
            onsets[variant] = SweepService.onset_times(SweepService.sweep(config, workers=1))
        for variant, times in onsets.items():
            self.assertTrue(np.all(np.isfinite(times)), variant)
        self.assertTrue(np.all(onsets['NOISELESS'] < onsets['NOISY']))
        self.assertAlmostEqual(onsets['NOISY'][0], 11.41, delta=0.1)
        self.assertAlmostEqual(onsets['NOISELESS'][0], 5.88, delta=0.1)
