import numpy as np
from django.test import SimpleTestCase, tag
from scipy import stats

from coupler.exceptions import HorizonError, ParameterError, StabilityError, TruncationError
from coupler.records import TimeSeries
from coupler.services.compare_service import CompareService
from coupler.services.linear_service import LinearCouplerService
from coupler.services.nonlinear_service import NonlinearAnalyticsService
from coupler.services.oracle_service import (
    DensityMatrix,
    FockDims,
    FockOracleService,
    OracleRun,
)
from coupler.services.params_service import CouplerParams, ParamsService

FOS = FockOracleService


def _run(params, dims, t_grid, dt=1e-3, alpha_b=0j, alpha_a=None, **kwargs):
    run = OracleRun(params=params, dims=dims, t_grid=t_grid, dt=dt, **kwargs)
    alpha_a = params.alpha0 if alpha_a is None else alpha_a
    rho0 = FOS.product_state(dims, alpha_a, alpha_b)
    return FOS.evolve(run, rho0, alpha_a)


def _linear_series(dc, alpha0, t_grid):
    return TimeSeries.from_moments(t_grid, [LinearCouplerService.linear_moments(dc, alpha0, t) for t in t_grid])


class CoherentStateTests(SimpleTestCase):
    def test_populations_are_poissonian(self):
        vector = FOS.coherent_state_vector(1.5 + 0.5j, 40)
        self.assertAlmostEqual(np.linalg.norm(vector), 1.0, places=14)
        np.testing.assert_allclose(np.abs(vector) ** 2, stats.poisson.pmf(np.arange(40), 2.5), atol=1e-14)

    def test_heavy_truncation_is_refused(self):
        with self.assertRaises(ParameterError):
            FOS.coherent_state_vector(5.0, 10)

    def test_light_truncation_warns(self):
        with self.assertLogs('coupler.services.oracle_service', level='WARNING'):
            FOS.coherent_state_vector(2.0, 20)

    def test_kerr_mean_is_periodic(self):
        beta, chi = 1.5, 0.2
        self.assertAlmostEqual(FOS.kerr_state_mean(beta, chi, 0.0), beta)
        self.assertAlmostEqual(FOS.kerr_state_mean(beta, chi, 2 * np.pi / chi), beta, places=12)


class LiouvillianTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(7)
        self.dims = FockDims(5, 4)
        m = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        rho = m @ m.conj().T
        self.rho = DensityMatrix(self.dims, rho / np.trace(rho))
        self.params = CouplerParams(1.0, 0.7, 0.3)

    def test_trace_is_preserved(self):
        derivative = FOS.lindblad_rhs(self.params, self.rho)
        self.assertAlmostEqual(derivative.trace(), 0.0, places=12)

    def test_hermiticity_is_preserved(self):
        derivative = FOS.lindblad_rhs(self.params, self.rho)
        self.assertLess(derivative.hermiticity_error(), 1e-12)

    def test_photon_number_rates_follow_ito_rules(self):
        # d<a^dagger a>/dt = 2 kappa (<a^dagger a> + 1) on a decoupled gain channel,
        # d<b^dagger b>/dt = -2 kappa <b^dagger b> on the loss channel
        params = CouplerParams(1.0, 0.0)
        rho = FOS.product_state(FockDims(30, 12), 1.0, 0.8)
        before = FOS.moments(rho.tensor)
        rate = FOS.moments(FOS.lindblad_tensor_rhs(params, rho.tensor))
        self.assertAlmostEqual(rate.n_a, 2 * (before.n_a + 1), places=8)
        self.assertAlmostEqual(rate.n_b, -2 * before.n_b, places=8)


class OracleGuardTests(SimpleTestCase):
    def test_dimension_budget(self):
        with self.assertRaises(ParameterError):
            FockDims(100, 100)

    def test_step_too_large_for_rk4(self):
        run = OracleRun(params=CouplerParams(1.0, 0.6), dims=FockDims(20, 20), t_grid=np.linspace(0, 1, 3), dt=0.1)
        with self.assertRaises(StabilityError):
            FOS.check_run(run, 0j)

    def test_horizon_beyond_the_basis(self):
        params = CouplerParams(1.0, 0.6, alpha0=1.0)
        with self.assertRaises(HorizonError) as ctx:
            _run(params, FockDims(8, 4), np.linspace(0, 5, 6))
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_leakage_aborts_the_run(self):
        with self.assertRaises(TruncationError) as ctx:
            _run(CouplerParams(1.0, 0.0), FockDims(6, 3), np.linspace(0, 0.2, 3))
        self.assertGreater(ctx.exception.t, 0.0)
        self.assertGreater(ctx.exception.leakage, 1e-6)


class OracleAnchorTests(SimpleTestCase):
    def test_decoupled_gain_channel(self):
        t = np.linspace(0, 0.5, 6)
        params = CouplerParams(1.0, 0.0, alpha0=1.0)
        coarse = _run(params, FockDims(60, 3), t)
        fine = _run(params, FockDims(60, 3), t, dt=5e-4)
        errors = [np.max(np.abs(s.column('a') / np.exp(t) - 1)) for s in (coarse, fine)]
        # fourth-order stepping: halving dt cuts the error about sixteenfold
        self.assertLessEqual(errors[1], max(errors[0] / 8, 1e-12))
        np.testing.assert_allclose(fine.column('a'), np.exp(t), rtol=1e-8)
        np.testing.assert_allclose(fine.column('n_a'), 2 * np.exp(2 * t) - 1, rtol=1e-8)
        self.assertLess(fine.meta['trace_drift'], 1e-9)

    def test_pt_linear_coupler_against_closed_form(self):
        params = CouplerParams(0.3, 1.0, alpha0=1.0)
        t = np.linspace(0, 1.0, 11)
        oracle = _run(params, FockDims(24, 12), t, dt=2e-3)
        analytic = _linear_series(ParamsService.derive_constants(params), 1.0, t)
        report = CompareService.compare(analytic, oracle, 1e-4)
        self.assertTrue(report.passed, report.to_json())

    @tag('slow')
    def test_linear_coupler_against_closed_form(self):
        params = CouplerParams(1.0, 0.6, alpha0=1.0)
        t = np.linspace(0, 1.0, 11)
        oracle = _run(params, FockDims(96, 12), t, dt=2e-3)
        analytic = _linear_series(ParamsService.derive_constants(params), 1.0, t)
        report = CompareService.compare(analytic, oracle, 1e-4)
        self.assertTrue(report.passed, report.to_json())
        self.assertGreater(oracle.column('n_b')[-1], abs(oracle.column('b')[-1]) ** 2)

    def test_repeated_runs_are_bit_identical(self):
        params = CouplerParams(1.0, 0.6, 0.1, 1.0)
        t = np.linspace(0, 0.2, 3)
        first = _run(params, FockDims(16, 6), t)
        second = _run(params, FockDims(16, 6), t)
        self.assertEqual(sorted(first.columns), sorted(second.columns))
        for name, values in first.columns.items():
            np.testing.assert_array_equal(values, second.columns[name], err_msg=name)

    @tag('slow')
    def test_decoupled_loss_channel(self):
        t = np.linspace(0, 0.5, 6)
        series = _run(CouplerParams(1.0, 0.0), FockDims(40, 14), t, alpha_b=1.0, alpha_a=0j)
        np.testing.assert_allclose(series.column('b'), np.exp(-t), rtol=1e-8)
        np.testing.assert_allclose(series.column('n_b'), np.exp(-2 * t), rtol=1e-8)

    @tag('slow')
    def test_kerr_revival(self):
        beta, chi = 1.5, 0.2
        t = np.linspace(0, 2 * np.pi / chi, 9)
        series = _run(CouplerParams(0.0, 0.0, chi), FockDims(4, 40), t, alpha_b=beta)
        expected = FOS.kerr_state_mean(beta, chi, t)
        self.assertLess(np.max(np.abs(series.column('b') - expected)), 1e-6)
        self.assertAlmostEqual(series.column('b')[-1], beta, delta=1e-6)

    @tag('slow')
    def test_broken_regime_kerr_coupler_within_loose_budget(self):
        kappa, j, chi, alpha0 = 1.0, 0.5, 1e-3, 2.0
        params = CouplerParams(kappa, j, chi, alpha0)
        dc = ParamsService.derive_constants(params)
        t = np.linspace(0, 0.4, 5)
        oracle = _run(params, FockDims(64, 10), t, dt=0.002)
        o1, _ = LinearCouplerService.mode_amplitudes(dc, alpha0)
        # the closed form keeps the growing component only
        b = NonlinearAnalyticsService.mean_b(dc, chi, alpha0, t) + o1 * np.exp(-dc.lambda_.real * t)
        analytic = TimeSeries(t=t, columns={'b': b})
        report = CompareService.compare(analytic, oracle, 0.1, notes="decaying and noise-operator terms dropped")
        self.assertTrue(report.passed, report.to_json())

        # without the decaying term the relative residual is 1/(e^{2 lambda t} - 1)
        growing = NonlinearAnalyticsService.mean_b(dc, chi, alpha0, t)
        relative = np.abs(oracle.column('b') - growing)[1:] / np.abs(oracle.column('b'))[1:]
        self.assertTrue(np.all(np.diff(relative) < 0))
        np.testing.assert_allclose(relative * np.expm1(2 * dc.lambda_.real * t[1:]), 1.0, rtol=0.05)

    @tag('slow')
    def test_first_order_error_scales_quadratically(self):
        kappa, j, alpha0 = 0.3, 1.0, 1.0
        t = np.linspace(0, 1.5, 4)
        residuals = []
        for chi in (0.05, 0.025):
            params = CouplerParams(kappa, j, chi, alpha0)
            dc = ParamsService.derive_constants(params)
            oracle = _run(params, FockDims(28, 28), t, dt=0.005, leak_threshold=1e-4)
            linear = LinearCouplerService.linear_mean_modes(dc, alpha0, t).mean_b
            _, delta_b = NonlinearAnalyticsService.perturbative_series(dc, chi, alpha0, t)
            residuals.append(np.max(np.abs(oracle.column('b') - linear - delta_b)))
        ratio = residuals[0] / residuals[1]
        self.assertGreaterEqual(ratio, 3.0)
        self.assertLessEqual(ratio, 5.0)
