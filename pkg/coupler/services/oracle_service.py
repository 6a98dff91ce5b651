"""
Brute-force reference: the two-mode master equation integrated in a truncated
Fock space.

States are dense (n_a n_b) x (n_a n_b) matrices over |n_a> (x) |n_b>, handled as
tensors rho[i, j, k, l] = <i, j| rho |k, l>. Ladder operators act as index shifts,
so no operator matrices are ever built.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from ..conf import get_setting
from ..exceptions import HorizonError, ParameterError, StabilityError, TruncationError
from ..integrators import integrate_rk4
from ..records import MomentSet, TimeSeries
from .params_service import ParamsService

logger = logging.getLogger(__name__)

TAIL_WARN = 1e-10
TAIL_REFUSE = 1e-4


@dataclass(frozen=True)
class FockDims:
    n_a: int
    n_b: int

    def __post_init__(self):
        for name in ('n_a', 'n_b'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        budget = get_setting('MAX_FOCK_DIM')
        if self.total > budget:
            raise ParameterError(f"total Fock dimension {self.total} exceeds the budget {budget}")

    @property
    def total(self):
        return self.n_a * self.n_b

    @property
    def tensor_shape(self):
        return (self.n_a, self.n_b, self.n_a, self.n_b)


@dataclass
class DensityMatrix:
    dims: FockDims
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        shape = (self.dims.total, self.dims.total)
        if self.entries.shape != shape:
            raise ParameterError(f"density matrix has shape {self.entries.shape}, expected {shape}")

    @property
    def tensor(self):
        return self.entries.reshape(self.dims.tensor_shape)

    @classmethod
    def from_tensor(cls, dims, tensor):
        return cls(dims=dims, entries=np.asarray(tensor).reshape(dims.total, dims.total))

    def trace(self):
        return complex(np.trace(self.entries))

    def hermiticity_error(self):
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass
class OracleRun:
    params: object
    dims: FockDims
    t_grid: np.ndarray
    dt: float = None
    leak_threshold: float = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dt = get_setting('ORACLE_DT') if self.dt is None else float(self.dt)
        if self.leak_threshold is None:
            self.leak_threshold = get_setting('LEAK_THRESHOLD')
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if self.dt <= 0:
            raise ParameterError("oracle step must be positive")
        if self.t_grid.ndim != 1 or self.t_grid.size < 1:
            raise ParameterError("oracle time grid must be one-dimensional")
        if self.t_grid[0] != 0 or np.any(np.diff(self.t_grid) <= 0):
            raise ParameterError("oracle time grid must start at 0 and increase")


def _lower(x, axis):
    """out[n] = sqrt(n+1) x[n+1] along axis: a on a ket index, a^dagger from the right on a bra index."""
    n = x.shape[axis]
    out = np.zeros_like(x)
    shape = [1] * x.ndim
    shape[axis] = n - 1
    factors = np.sqrt(np.arange(1, n)).reshape(shape)
    dst = [slice(None)] * x.ndim
    src = [slice(None)] * x.ndim
    dst[axis] = slice(0, n - 1)
    src[axis] = slice(1, n)
    out[tuple(dst)] = factors * x[tuple(src)]
    return out


def _raise(x, axis):
    """out[n] = sqrt(n) x[n-1] along axis: a^dagger on a ket index, a from the right on a bra index."""
    n = x.shape[axis]
    out = np.zeros_like(x)
    shape = [1] * x.ndim
    shape[axis] = n - 1
    factors = np.sqrt(np.arange(1, n)).reshape(shape)
    dst = [slice(None)] * x.ndim
    src = [slice(None)] * x.ndim
    dst[axis] = slice(1, n)
    src[axis] = slice(0, n - 1)
    out[tuple(dst)] = factors * x[tuple(src)]
    return out


def _trace(x):
    return complex(np.einsum('ijij->', x))


class FockOracleService:
    @staticmethod
    def coherent_tail_mass(alpha, dim):
        """Poisson probability of n >= dim for a coherent state of amplitude alpha."""
        return float(stats.poisson.sf(dim - 1, abs(complex(alpha)) ** 2))

    @staticmethod
    def coherent_state_vector(alpha, dim):
        """
        Truncated coherent-state amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!),
        renormalized after truncation.
        """
        if int(dim) != dim or dim < 1:
            raise ParameterError(f"dimension must be a positive integer, got {dim!r}")
        alpha = complex(alpha)
        tail = FockOracleService.coherent_tail_mass(alpha, dim)
        if tail > TAIL_REFUSE:
            raise ParameterError(
                f"coherent state |{alpha}> loses {tail:.3g} probability beyond {dim} levels"
            )
        if tail > TAIL_WARN:
            logger.warning("coherent state |%s> truncated at %d levels, tail mass %.3g", alpha, dim, tail)

        vector = np.zeros(int(dim), dtype=complex)
        if alpha == 0:
            vector[0] = 1.0
            return vector
        n = np.arange(int(dim))
        log_amp = n * np.log(abs(alpha)) - 0.5 * special.gammaln(n + 1) - 0.5 * abs(alpha) ** 2
        vector = np.exp(log_amp) * np.exp(1j * n * np.angle(alpha))
        return vector / np.linalg.norm(vector)

    @staticmethod
    def phase_moment_by_summation(alpha, theta, m, dim=60):
        """<alpha| e^{i theta n} c^m |alpha> summed term by term in a truncated basis."""
        psi = FockOracleService.coherent_state_vector(alpha, dim)
        n = np.arange(dim - m)
        lowered = np.exp(0.5 * (special.gammaln(n + m + 1) - special.gammaln(n + 1))) * psi[m:]
        return complex(np.sum(np.conj(psi[:dim - m]) * np.exp(1j * theta * n) * lowered))

    @staticmethod
    def kerr_state_mean(beta, chi, t):
        """
        <b(t)> for a coherent state under H = chi/2 b^dagger^2 b^2 alone:
        beta exp(|beta|^2 (e^{-i chi t} - 1)). Periodic in chi t with period 2 pi.
        """
        beta = complex(beta)
        phase = -chi * np.asarray(t, dtype=float)
        value = beta * np.exp(abs(beta) ** 2 * 2j * np.sin(phase / 2) * np.exp(0.5j * phase))
        return value.item() if np.ndim(value) == 0 else value

    @staticmethod
    def product_state(dims, alpha_a=0j, alpha_b=0j):
        """|alpha_a> (x) |alpha_b> as a density matrix."""
        psi = np.kron(
            FockOracleService.coherent_state_vector(alpha_a, dims.n_a),
            FockOracleService.coherent_state_vector(alpha_b, dims.n_b),
        )
        return DensityMatrix(dims=dims, entries=np.outer(psi, psi.conj()))

    @staticmethod
    def lindblad_tensor_rhs(params, x):
        """
        d rho/dt = -i[J(a b^dagger + a^dagger b) + chi/2 b^dagger^2 b^2, rho]
                   - kappa (a a^dagger rho + rho a a^dagger - 2 a^dagger rho a)
                   - kappa (b^dagger b rho + rho b^dagger b - 2 b rho b^dagger)
        on the tensor form of rho.
        """
        kappa, j, chi = params.kappa, params.j_coupling, params.chi
        n_a, n_b = x.shape[0], x.shape[1]
        out = np.zeros_like(x)

        if j:
            h_rho = _lower(_raise(x, 1), 0) + _raise(_lower(x, 1), 0)
            rho_h = _raise(_lower(x, 3), 2) + _lower(_raise(x, 3), 2)
            out += -1j * j * (h_rho - rho_h)

        if chi:
            levels = np.arange(n_b)
            kerr = 0.5 * chi * levels * (levels - 1)
            out += -1j * (kerr[None, :, None, None] - kerr[None, None, None, :]) * x

        if kappa:
            # a a^dagger in the truncated space: n + 1 below the top level, 0 at it
            gain = np.arange(1, n_a + 1, dtype=float)
            gain[-1] = 0.0
            out += -kappa * (gain[:, None, None, None] + gain[None, None, :, None]) * x
            out += 2 * kappa * _raise(_raise(x, 0), 2)

            loss = np.arange(n_b, dtype=float)
            out += -kappa * (loss[None, :, None, None] + loss[None, None, None, :]) * x
            out += 2 * kappa * _lower(_lower(x, 1), 3)
        return out

    @staticmethod
    def lindblad_rhs(params, rho):
        """Master-equation derivative of a DensityMatrix, returned with the same shape."""
        tensor = FockOracleService.lindblad_tensor_rhs(params, rho.tensor)
        return DensityMatrix.from_tensor(rho.dims, tensor)

    @staticmethod
    def leakage(x):
        """Largest population held by the top two Fock levels of either mode."""
        diag = np.einsum('ijij->ij', x).real
        pop_a = diag.sum(axis=1)
        pop_b = diag.sum(axis=0)
        return float(max(pop_a[-2:].sum(), pop_b[-2:].sum()))

    @staticmethod
    def moments(x):
        """Tr(rho O) for every moment the analytic engines report."""
        mean_a = _trace(_lower(x, 0))
        mean_b = _trace(_lower(x, 1))
        diag = np.einsum('ijij->ij', x).real
        n_a = float(np.sum(np.arange(x.shape[0])[:, None] * diag))
        n_b = float(np.sum(np.arange(x.shape[1])[None, :] * diag))
        return MomentSet(
            mean_a=mean_a,
            mean_b=mean_b,
            n_a=n_a,
            n_b=n_b,
            ab=_trace(_lower(_lower(x, 0), 1)),
            adag_bdag=_trace(_raise(_raise(x, 0), 1)),
            bb=_trace(_lower(_lower(x, 1), 1)),
        )

    @staticmethod
    def stability_scale(params, dims):
        """Upper estimate of the largest Liouvillian eigenvalue magnitude."""
        n_a, n_b = dims.n_a, dims.n_b
        return (
            4 * params.kappa * (n_a + n_b)
            + 4 * params.j_coupling * np.sqrt(n_a * n_b)
            + 0.5 * params.chi * max(n_b - 1, 0) * max(n_b - 2, 0)
        )

    @staticmethod
    def check_run(run, alpha_a):
        """Stability and horizon prechecks; raises before any work is done."""
        scale = FockOracleService.stability_scale(run.params, run.dims)
        if run.dt * scale > 2.5:
            raise StabilityError(
                f"dt={run.dt} too large for RK4 at these dimensions (dt * scale = {run.dt * scale:.3g} > 2.5)"
            )
        dc = ParamsService.derive_constants(run.params)
        growth = np.exp(2 * max(dc.lambda_.real, 0.0) * run.t_grid[-1])
        demand = growth * (abs(complex(alpha_a)) ** 2 + 1)
        if demand > run.dims.n_a / 4:
            raise HorizonError(
                f"gain channel reaches ~{demand:.3g} photons by t={run.t_grid[-1]}, "
                f"above n_a/4 = {run.dims.n_a / 4}",
                t=float(run.t_grid[-1]),
            )

    @staticmethod
    def evolve(run, rho0, alpha_a=None):
        """
        Fixed-step RK4 over run.t_grid. Moments are sampled at every grid point; the
        run aborts as soon as the leakage monitor crosses run.leak_threshold. The
        trace is never renormalized: its drift is reported in the series meta.
        """
        if alpha_a is None:
            alpha_a = run.params.alpha0
        FockOracleService.check_run(run, alpha_a)
        if rho0.dims != run.dims:
            raise ParameterError("initial state dimensions do not match the run")

        params = run.params

        def f(x):
            return FockOracleService.lindblad_tensor_rhs(params, x)

        logger.info(
            "oracle run: dims=(%d, %d) dt=%s samples=%d t_max=%s",
            run.dims.n_a, run.dims.n_b, run.dt, run.t_grid.size, run.t_grid[-1],
        )
        x = rho0.tensor.copy()
        moments = [FockOracleService.moments(x)]
        leak = [FockOracleService.leakage(x)]
        traces = [_trace(x)]
        t_now, steps = 0.0, 0
        for k in range(1, run.t_grid.size):
            span = run.t_grid[k] - run.t_grid[k - 1]
            substeps = max(1, int(np.ceil(span / run.dt - 1e-9)))
            dt = span / substeps
            for _ in range(substeps):
                x = integrate_rk4(x, dt, f)
                t_now += dt
                steps += 1
                current = FockOracleService.leakage(x)
                if current > run.leak_threshold or not np.isfinite(current):
                    raise TruncationError(
                        f"truncation leakage {current:.3g} exceeded {run.leak_threshold:g} at t={t_now:.6g}",
                        t=t_now,
                        leakage=current,
                    )
            moments.append(FockOracleService.moments(x))
            leak.append(FockOracleService.leakage(x))
            traces.append(_trace(x))

        final = DensityMatrix.from_tensor(run.dims, x)
        trace_drift = float(np.max(np.abs(np.array(traces) - 1)))
        hermiticity = final.hermiticity_error()
        if trace_drift > 10 * run.leak_threshold:
            logger.warning("trace drift %.3g exceeds 10x the leakage threshold", trace_drift)
        logger.info("oracle run finished: %d steps, trace drift %.3g, max leakage %.3g", steps, trace_drift, max(leak))

        series = TimeSeries.from_moments(run.t_grid, moments, meta={
            'engine': 'ORACLE',
            'dims': [run.dims.n_a, run.dims.n_b],
            'dt': run.dt,
            'steps': steps,
            'trace_drift': trace_drift,
            'hermiticity_error': hermiticity,
            'max_leakage': float(max(leak)),
            'leak_threshold': run.leak_threshold,
        })
        series.add('leakage', np.array(leak))
        series.add('trace', np.real(np.array(traces)))
        return series
