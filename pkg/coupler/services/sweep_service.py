import logging
from multiprocessing import Pool

import numpy as np
from django.conf import settings

from ..conf import DEFAULTS, get_setting
from ..exceptions import (
    ConfigError,
    CouplerError,
    QuadratureError,
    RegimeError,
    UndefinedD3Error,
    UndefinedRatioError,
)
from ..records import SweepSurface
from .nonlinear_service import NonlinearAnalyticsService, Variant
from .params_service import CouplerParams, ParamsService, Regime

logger = logging.getLogger(__name__)

SWEEP_QUANTITIES = ('change_ratio', 'd3', 'eb1_overlap')
BROKEN_ONLY = ('d3', 'eb1_overlap')

REASONS = {
    UndefinedRatioError: 'undefined_ratio',
    UndefinedD3Error: 'undefined_d3',
    QuadratureError: 'quadrature',
}


def _reason(exc):
    for kind, code in REASONS.items():
        if isinstance(exc, kind):
            return code
    return 'error'


def _configure_worker(tunables):
    if not settings.configured:
        settings.configure(COUPLER=tunables)


def _cell_value(dc, quantity, variant, chi, alpha0, t, include_eb1):
    if quantity == 'change_ratio':
        return NonlinearAnalyticsService.change_ratio(dc, chi, alpha0, t, variant, include_eb1)
    if quantity == 'eb1_overlap':
        return NonlinearAnalyticsService.eb1_overlap_measure(dc, chi, alpha0, t)
    moments = NonlinearAnalyticsService.moments(dc, chi, alpha0, t, variant, include_eb1)
    return NonlinearAnalyticsService.d3(moments)


def evaluate_row(task):
    """
    One J/kappa row of a surface: (values, reasons). Rows are evaluated the same
    way whichever process runs them, so surfaces do not depend on the worker count.
    """
    j_over_kappa, t_axis, chi, alpha0, quantity, variant, include_eb1 = task
    dc = ParamsService.derive_constants(CouplerParams(1.0, j_over_kappa, chi, alpha0))
    values = np.full(t_axis.shape, np.nan)
    reasons = np.full(t_axis.shape, '', dtype=object)

    try:
        if quantity == 'change_ratio':
            values[:] = NonlinearAnalyticsService.change_ratio(dc, chi, alpha0, t_axis, variant, include_eb1)
        elif quantity == 'eb1_overlap':
            values[:] = NonlinearAnalyticsService.eb1_overlap_measure(dc, chi, alpha0, t_axis)
        else:
            series = NonlinearAnalyticsService.moments_series(dc, chi, alpha0, t_axis, variant, include_eb1)
            for k in range(t_axis.size):
                try:
                    values[k] = NonlinearAnalyticsService.d3(series.moment_at(k))
                except CouplerError as exc:
                    reasons[k] = _reason(exc)
    except (UndefinedRatioError, QuadratureError):
        # fall back to single cells so only the offending points are flagged
        for k, t in enumerate(t_axis):
            try:
                values[k] = _cell_value(dc, quantity, variant, chi, alpha0, float(t), include_eb1)
            except (UndefinedRatioError, UndefinedD3Error, QuadratureError) as exc:
                values[k] = np.nan
                reasons[k] = _reason(exc)

    bad = ~np.isfinite(values) & (reasons == '')
    reasons[bad] = 'non_finite'
    values[bad] = np.nan
    return values, reasons


class SweepService:
    @staticmethod
    def axes(config):
        if not config.sweep:
            raise ConfigError("scenario has no sweep block")
        sweep = config.sweep
        j_axis = np.linspace(sweep['j_min'], sweep['j_max'], int(sweep['j_steps']))
        return j_axis, config.t_grid()

    @staticmethod
    def check_range(j_axis, quantity):
        """All rows must sit in one analytic regime, clear of the exceptional point."""
        margin = get_setting('SWEEP_EP_MARGIN')
        if np.any(np.abs(j_axis - 1.0) < margin):
            raise ConfigError(f"sweep range reaches within {margin} of the exceptional point")
        regimes = {ParamsService.classify_regime(CouplerParams(1.0, j)) for j in j_axis}
        if len(regimes) != 1:
            raise ConfigError("sweep range straddles the exceptional point")
        regime = regimes.pop()
        if quantity in BROKEN_ONLY and regime is not Regime.BROKEN:
            raise RegimeError(f"{quantity} is defined only in the BROKEN regime")
        return regime

    @staticmethod
    def sweep(config, workers=None):
        """Evaluates config.quantity over the (J/kappa, kappa t) grid of the sweep block."""
        quantity = config.quantity
        if quantity not in SWEEP_QUANTITIES:
            raise ConfigError(f"cannot sweep '{quantity}'; choose one of {', '.join(SWEEP_QUANTITIES)}")
        if config.variant not in (Variant.NOISY.value, Variant.NOISELESS.value):
            raise ConfigError("sweeps run the NOISY or NOISELESS analytics")
        j_axis, t_axis = SweepService.axes(config)
        regime = SweepService.check_range(j_axis, quantity)
        workers = get_setting('SWEEP_WORKERS') if workers is None else workers

        tasks = [
            (float(j), t_axis, config.chi_over_kappa, config.alpha0, quantity,
             Variant(config.variant), config.include_eb1)
            for j in j_axis
        ]
        logger.info("sweep %s: %d x %d grid, %s regime, %d worker(s)",
                    quantity, j_axis.size, t_axis.size, regime.value, workers)
        if workers > 1:
            tunables = {name: get_setting(name) for name in DEFAULTS}
            with Pool(processes=workers, initializer=_configure_worker, initargs=(tunables,)) as pool:
                rows = pool.map(evaluate_row, tasks)
        else:
            rows = [evaluate_row(task) for task in tasks]

        values = np.vstack([row[0] for row in rows])
        reasons = np.vstack([row[1] for row in rows])
        return SweepSurface(
            j_axis=j_axis,
            t_axis=t_axis,
            values=values,
            quantity=quantity,
            reasons=reasons,
            meta={'regime': regime.value, 'variant': config.variant, 'nan_cells': int(np.sum(reasons != ''))},
        )

    @staticmethod
    def onset_time(t_axis, values, level=0.99):
        """First sampled time at which values reach level, or None."""
        reached = np.nonzero(np.nan_to_num(np.asarray(values, dtype=float), nan=-np.inf) >= level)[0]
        return float(t_axis[reached[0]]) if reached.size else None

    @staticmethod
    def onset_times(surface, level=0.99):
        """onset_time for every row of a surface; NaN where the level is never reached."""
        times = [SweepService.onset_time(surface.t_axis, row, level) for row in surface.values]
        return np.array([np.nan if t is None else t for t in times])
