import logging
from dataclasses import dataclass

import numpy as np

from ..conf import get_setting
from ..exceptions import DivergenceError, ParameterError
from ..integrators import integrate_rk4
from ..records import TimeSeries

logger = logging.getLogger(__name__)

OVERFLOW_GUARD = 1e150


@dataclass(frozen=True)
class MeanFieldState:
    alpha: complex
    beta: complex
    t: float


class MeanFieldService:
    @staticmethod
    def rhs(params):
        """d/dt (alpha, beta) for the classical field equations."""
        kappa, j, chi = params.kappa, params.j_coupling, params.chi

        def f(y):
            alpha, beta = y
            return np.array([
                kappa * alpha - 1j * j * beta,
                -kappa * beta - 1j * j * alpha - 1j * chi * abs(beta) ** 2 * beta,
            ])
        return f

    @staticmethod
    def trajectory(params, alpha0, t_grid, step):
        f = MeanFieldService.rhs(params)
        y = np.array([complex(alpha0), 0j])
        out = np.empty((t_grid.size, 2), dtype=complex)
        out[0] = y
        t_now = t_grid[0]
        for k in range(1, t_grid.size):
            span = t_grid[k] - t_grid[k - 1]
            substeps = max(1, int(np.ceil(span / step - 1e-9)))
            dt = span / substeps
            for _ in range(substeps):
                y = integrate_rk4(y, dt, f)
                t_now += dt
                if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > OVERFLOW_GUARD:
                    raise DivergenceError(f"mean-field amplitudes diverged at t={t_now:.6g}", t=t_now)
            out[k] = y
        return out

    @staticmethod
    def integrate_meanfield(params, alpha0, t_grid, step=None):
        """Fixed-step RK4 integration of the classical field equations from (alpha0, 0)."""
        states, _ = MeanFieldService.integrate_with_estimate(params, alpha0, t_grid, step)
        return states

    @staticmethod
    def integrate_with_estimate(params, alpha0, t_grid, step=None):
        """
        Returns (states, error_estimate). The estimate is the largest difference
        between runs at step h and h/2, scaled by 1/15 (Richardson for a fourth-order rule).
        """
        step = get_setting('MEANFIELD_STEP') if step is None else step
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.ndim != 1 or t_grid.size < 1:
            raise ParameterError("mean-field integration needs a one-dimensional time grid")
        if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
            raise ParameterError("mean-field time grid must start at 0 and increase")
        spacing = np.diff(t_grid)
        if spacing.size and not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0):
            raise ParameterError("mean-field time grid must be uniform")
        if step <= 0:
            raise ParameterError("integration step must be positive")

        coarse = MeanFieldService.trajectory(params, alpha0, t_grid, step)
        fine = MeanFieldService.trajectory(params, alpha0, t_grid, step / 2)
        scale = np.maximum(np.abs(fine), 1.0)
        estimate = float(np.max(np.abs(coarse - fine) / scale)) / 15.0
        logger.debug("mean-field run: %d samples, step=%s, error estimate %.3g", t_grid.size, step, estimate)

        states = [MeanFieldState(alpha=complex(a), beta=complex(b), t=float(t)) for (a, b), t in zip(coarse, t_grid)]
        return states, estimate

    @staticmethod
    def series(params, alpha0, t_grid, step=None):
        """Mean-field run as a TimeSeries with |alpha|^2, |beta|^2 standing in for photon numbers."""
        states, estimate = MeanFieldService.integrate_with_estimate(params, alpha0, t_grid, step)
        alpha = np.array([s.alpha for s in states])
        beta = np.array([s.beta for s in states])
        series = TimeSeries(t=t_grid, meta={'engine': 'MEANFIELD', 'error_estimate': estimate})
        series.add('a', alpha)
        series.add('b', beta)
        series.add('n_a', np.abs(alpha) ** 2)
        series.add('n_b', np.abs(beta) ** 2)
        return series
