import json
import logging
from pathlib import Path

import numpy as np

from ..conf import get_setting
from ..exceptions import ConfigError, CouplerError, RegimeError
from ..forms import ScenarioForm
from ..records import TimeSeries
from .linear_service import Channel, LinearCouplerService
from .meanfield_service import MeanFieldService
from .nonlinear_service import NonlinearAnalyticsService, Variant
from .oracle_service import FockDims, FockOracleService, OracleRun
from .output_service import OutputService
from .params_service import CouplerParams, ParamsService, Regime
from .sweep_service import SweepService

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent.parent / 'presets'


def _add_quadratures(series):
    a, b = series.column('a'), series.column('b')
    series.add('X_A', NonlinearAnalyticsService.quadrature_mean(a, 0.0))
    series.add('P_A', NonlinearAnalyticsService.quadrature_mean(a, np.pi / 2))
    series.add('X_B', NonlinearAnalyticsService.quadrature_mean(b, 0.0))
    series.add('P_B', NonlinearAnalyticsService.quadrature_mean(b, np.pi / 2))


def _d3_column(series):
    values = np.full(len(series), np.nan)
    undefined = []
    for k in range(len(series)):
        try:
            values[k] = NonlinearAnalyticsService.d3(series.moment_at(k))
        except CouplerError as exc:
            undefined.append(float(series.t[k]))
            logger.debug("D3 undefined at t=%s: %s", series.t[k], exc)
    series.meta['d3_undefined_at'] = undefined
    return values


def _constants_meta(dc):
    return {
        'regime': dc.regime.value,
        'lambda': dc.lambda_,
        'eta1': dc.eta1,
        'eta2': dc.eta2,
        'zeta1': dc.zeta1,
        'zeta2': dc.zeta2,
    }


class ScenarioService:
    @staticmethod
    def config_from_data(data):
        """Validates raw request data with ScenarioForm and returns a ScenarioConfig."""
        form = ScenarioForm(data)
        if not form.is_valid():
            raise ConfigError(form.errors.as_text())
        return form.to_config()

    @staticmethod
    def load_config_file(path):
        try:
            data = json.loads(Path(path).read_text(encoding='utf-8'))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return data

    @staticmethod
    def params_for(config):
        return CouplerParams(1.0, config.j_over_kappa, config.chi_over_kappa, config.alpha0)

    @staticmethod
    def _linear(config, dc, t_grid):
        if config.quantity in ('change_ratio', 'eb1_overlap'):
            raise ConfigError(f"'{config.quantity}' compares against the nonlinear engines; use NOISY or NOISELESS")
        means = LinearCouplerService.linear_mean_modes(dc, config.alpha0, t_grid)
        a = np.asarray(means.mean_a, dtype=complex)
        b = np.asarray(means.mean_b, dtype=complex)
        series = TimeSeries(t=t_grid)
        series.add('a', a)
        series.add('b', b)
        series.add('n_a', np.abs(a) ** 2 + LinearCouplerService.noise_occupation(dc, Channel.A, t_grid))
        series.add('n_b', np.abs(b) ** 2 + LinearCouplerService.noise_occupation(dc, Channel.B, t_grid))
        if config.quantity == 'd3':
            series.add('ab', a * b)
            series.add('bb', b ** 2)
            series.add('d3', _d3_column(series))
        return series

    @staticmethod
    def _nonlinear(config, dc, t_grid):
        variant = Variant(config.variant)
        chi, alpha0 = config.chi_over_kappa, config.alpha0
        if config.quantity == 'change_ratio':
            series = TimeSeries(t=t_grid)
            series.add('ratio', NonlinearAnalyticsService.change_ratio(
                dc, chi, alpha0, t_grid, variant, config.include_eb1,
            ))
            return series
        if dc.regime is not Regime.BROKEN:
            raise RegimeError(f"'{config.quantity}' under {variant.value} dynamics needs the BROKEN regime")
        if config.quantity == 'eb1_overlap':
            series = TimeSeries(t=t_grid)
            series.add('eb1_overlap', NonlinearAnalyticsService.eb1_overlap_measure(dc, chi, alpha0, t_grid))
            return series
        series = NonlinearAnalyticsService.moments_series(dc, chi, alpha0, t_grid, variant, config.include_eb1)
        if config.quantity == 'd3':
            series.add('d3', _d3_column(series))
        return series

    @staticmethod
    def _meanfield(config, params, dc, t_grid):
        if config.quantity not in ('moments', 'quadratures'):
            raise ConfigError("MEANFIELD runs report moments or quadratures only")
        series = MeanFieldService.series(params, config.alpha0, t_grid)
        if dc.regime is not Regime.EXCEPTIONAL:
            # quantum photon number of the same coupler, spontaneous photons included
            n_b = np.abs(np.asarray(LinearCouplerService.linear_mean_modes(dc, config.alpha0, t_grid).mean_b)) ** 2
            series.add('n_b_quantum', n_b + LinearCouplerService.noise_occupation(dc, Channel.B, t_grid))
        return series

    @staticmethod
    def _oracle(config, params, t_grid):
        if config.quantity not in ('moments', 'quadratures'):
            raise ConfigError("ORACLE runs report moments or quadratures only")
        if not config.oracle:
            raise ConfigError("ORACLE runs need an oracle block (n_a, n_b, dt)")
        dims = FockDims(config.oracle['n_a'], config.oracle['n_b'])
        run = OracleRun(params=params, dims=dims, t_grid=t_grid, dt=config.oracle.get('dt'))
        rho0 = FockOracleService.product_state(dims, config.alpha0, 0j)
        return FockOracleService.evolve(run, rho0)

    @staticmethod
    def compute(config):
        """Dispatches a validated config to its engine; returns a TimeSeries or SweepSurface."""
        if config.sweep:
            return SweepService.sweep(config)

        params = ScenarioService.params_for(config)
        dc = ParamsService.derive_constants(params)
        t_grid = config.t_grid()
        variant = config.variant

        # 1. Engines that accept the exceptional point
        if variant == 'MEANFIELD':
            series = ScenarioService._meanfield(config, params, dc, t_grid)
        elif variant == 'ORACLE':
            series = ScenarioService._oracle(config, params, t_grid)
        # 2. Analytic engines
        else:
            dc.require_analytic(f"{variant} analytics")
            if variant == 'LINEAR':
                series = ScenarioService._linear(config, dc, t_grid)
            else:
                series = ScenarioService._nonlinear(config, dc, t_grid)

        if config.quantity == 'quadratures':
            _add_quadratures(series)
        series.meta.update({'engine': variant, 'quantity': config.quantity, **_constants_meta(dc)})
        return series

    @staticmethod
    def run_scenario(config, path=None):
        """Computes a scenario and writes its artifact(s); returns the written paths."""
        logger.info("running scenario %s (%s, %s)", config.name or '-', config.variant, config.quantity)
        result = ScenarioService.compute(config)
        return OutputService.write(result, config, path)

    @staticmethod
    def preset_names():
        return sorted(p.stem for p in PRESET_DIR.glob('*.json'))

    @staticmethod
    def load_preset(name):
        """Named figure preset as a list of ScenarioConfig; missing grid sizes default to PRESET_GRID."""
        path = PRESET_DIR / f"{name}.json"
        if not path.exists():
            raise ConfigError(f"unknown preset '{name}'; available: {', '.join(ScenarioService.preset_names())}")
        preset = ScenarioService.load_config_file(path)
        grid = get_setting('PRESET_GRID')
        configs = []
        for entry in preset.get('scenarios', []):
            data = dict(entry)
            data.setdefault('n_samples', grid)
            if 'sweep_j_min' in data:
                data.setdefault('sweep_steps', grid)
            configs.append(ScenarioService.config_from_data(data))
        if not configs:
            raise ConfigError(f"preset '{name}' defines no scenarios")
        return configs

    @staticmethod
    def run_figure(name, output_dir=None):
        """Regenerates every series of a figure preset under output_dir/<name>/."""
        output_dir = Path(output_dir or get_setting('OUTPUT_DIR')) / name
        written = []
        for config in ScenarioService.load_preset(name):
            suffix = '.json' if config.fmt == 'JSON' else '.csv'
            written += ScenarioService.run_scenario(config, output_dir / f"{config.name}{suffix}")
        return written
