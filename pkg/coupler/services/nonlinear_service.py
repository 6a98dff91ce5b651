"""
Closed-form nonlinear observables of the Kerr coupler.

In the symmetry-broken regime the growing loss-channel component is written as
o2 = sqrt(zeta1) c with [c, c^dagger] = 1, so every reservoir-averaged moment
reduces to coherent-state expectations of exp(i theta n) c^m. Only the growing
e^{lambda t} parts are kept; they are accurate once lambda t is a few units.
In the PT-symmetric regime the nonlinearity is treated perturbatively, to first
order in closed form and to second order through a small linear ODE hierarchy.
"""
import logging
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from ..conf import get_setting
from ..exceptions import (
    NumericalConsistencyError,
    ParameterError,
    QuadratureError,
    UndefinedD3Error,
    UndefinedRatioError,
)
from ..records import TimeSeries
from .linear_service import Channel, CommutatorKind, CommutatorVariant, LinearCouplerService, Pair
from .params_service import Regime

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    NOISY = 'NOISY'
    NOISELESS = 'NOISELESS'


@dataclass(frozen=True)
class PhaseFunctions:
    theta: complex
    s_scalar: complex
    variant: Variant


@dataclass(frozen=True)
class NormalizedMode:
    alpha_tilde: complex
    zeta1: complex


@dataclass(frozen=True)
class KerrCorrection:
    """Kerr corrections to the linear means, split by order in chi."""
    first_a: complex
    first_b: complex
    second_a: complex
    second_b: complex

    @property
    def delta_a(self):
        return self.first_a + self.second_a

    @property
    def delta_b(self):
        return self.first_b + self.second_b


def expm1_i(theta):
    """e^{i theta} - 1 without cancellation for small theta."""
    return 2j * np.sin(theta / 2) * np.exp(0.5j * theta)


def _scalar(value):
    value = np.asarray(value)
    return value.item() if value.ndim == 0 else value


class NonlinearAnalyticsService:
    @staticmethod
    def coherent_phase_moment(alpha, theta, m):
        """
        <alpha| e^{i theta n} c^m |alpha> = alpha^m exp(|alpha|^2 (e^{i theta} - 1)).
        """
        if m < 0 or int(m) != m:
            raise ParameterError(f"moment order must be a nonnegative integer, got {m!r}")
        alpha = complex(alpha)
        return alpha ** int(m) * np.exp(abs(alpha) ** 2 * expm1_i(theta))

    @staticmethod
    def normalized_mode(dc, alpha0):
        """
        alpha_tilde = o2 / sqrt(zeta1). Written as -i alpha0 sqrt(eta2 / 2 kappa),
        which is the same number and stays regular as J -> 0.
        """
        dc.require(Regime.BROKEN, operation='normalized_mode')
        alpha_tilde = -1j * complex(alpha0) * np.sqrt(dc.eta2.real / (2 * dc.kappa))
        return NormalizedMode(alpha_tilde=complex(alpha_tilde), zeta1=dc.zeta1)

    @staticmethod
    def phase_functions(dc, chi, t, variant=Variant.NOISY):
        """
        NOISY:     theta = zeta1 zeta2 chi (e^{2 lambda t} - 1) / 2 lambda,
                   s = zeta2 chi (kappa/lambda)(J/2 lambda)^2 [(e^{2 lambda t} - 1)/2 lambda - t]
        NOISELESS: theta = -zeta1^2 chi (e^{4 lambda t} - 1) / 4 lambda, s = 0
        """
        dc.require(Regime.BROKEN, operation='phase_functions')
        variant = Variant(variant)
        t = np.asarray(t, dtype=float)
        lam = dc.lambda_.real
        zeta1, zeta2 = dc.zeta1.real, dc.zeta2.real
        if variant is Variant.NOISY:
            grow = np.expm1(2 * lam * t) / (2 * lam)
            theta = zeta1 * zeta2 * chi * grow
            prefactor = (dc.kappa / lam) * (dc.j_coupling / (2 * lam)) ** 2
            s_scalar = zeta2 * chi * prefactor * (grow - t)
        else:
            theta = -zeta1 ** 2 * chi * np.expm1(4 * lam * t) / (4 * lam)
            s_scalar = np.zeros_like(theta)
        return PhaseFunctions(theta=_scalar(theta), s_scalar=_scalar(s_scalar), variant=variant)

    @staticmethod
    def _growing_amplitude(dc, alpha0, t):
        _, o2 = LinearCouplerService.mode_amplitudes(dc, alpha0)
        return np.exp(dc.lambda_.real * np.asarray(t, dtype=float)) * o2

    @staticmethod
    def eb0(dc, chi, alpha0, t):
        """Leading term of the reservoir-averaged <b(t)>."""
        dc.require(Regime.BROKEN, operation='eb0')
        mode = NonlinearAnalyticsService.normalized_mode(dc, alpha0)
        phases = NonlinearAnalyticsService.phase_functions(dc, chi, t, Variant.NOISY)
        value = (
            np.exp(1j * np.asarray(phases.s_scalar))
            * NonlinearAnalyticsService._growing_amplitude(dc, alpha0, t)
            * np.exp(abs(mode.alpha_tilde) ** 2 * expm1_i(np.asarray(phases.theta)))
        )
        return _scalar(value)

    @staticmethod
    def _oscillatory_integral(omega, v_lo, v_hi, epsrel, panel_cap):
        """
        integral of v/(1+v) e^{i omega v} over [v_lo, v_hi], on geometric panels
        with the QUADPACK oscillatory-weight rule. Returns (value, abserr, panels).
        """
        edges = [v_lo]
        edge = 1.0
        while edge < v_hi:
            if edge > v_lo:
                edges.append(edge)
            edge *= 2.0
        edges.append(v_hi)
        if len(edges) - 1 > panel_cap:
            raise QuadratureError(
                f"EB1 quadrature needs {len(edges) - 1} panels, cap is {panel_cap}"
            )

        def weight(v):
            return v / (1.0 + v)

        wvar = abs(omega)
        sign = 1.0 if omega >= 0 else -1.0
        total, abserr = 0j, 0.0
        with warnings.catch_warnings():
            warnings.simplefilter('error', integrate.IntegrationWarning)
            for lo, hi in zip(edges[:-1], edges[1:]):
                if hi <= lo:
                    continue
                epsabs = 1e-3 * epsrel * (hi - lo)
                try:
                    if wvar == 0.0:
                        re, err_re = integrate.quad(weight, lo, hi, epsabs=epsabs, epsrel=epsrel)
                        im, err_im = 0.0, 0.0
                    else:
                        re, err_re = integrate.quad(
                            weight, lo, hi, weight='cos', wvar=wvar,
                            epsabs=epsabs, epsrel=epsrel, limit=200, maxp1=100,
                        )
                        im, err_im = integrate.quad(
                            weight, lo, hi, weight='sin', wvar=wvar,
                            epsabs=epsabs, epsrel=epsrel, limit=200, maxp1=100,
                        )
                except integrate.IntegrationWarning as exc:
                    raise QuadratureError(
                        f"EB1 panel [{lo:.6g}, {hi:.6g}] did not converge: {exc}", abserr
                    ) from exc
                total += re + 1j * sign * im
                abserr += err_re + err_im
        return total, abserr, len(edges) - 1

    @staticmethod
    def eb1_integral(dc, chi, t, epsrel=None, panel_cap=None):
        """
        I(t) = integral_0^t sigma(tau) exp(i theta_noisy(tau)) dtau, with the
        substitution v = e^{2 lambda tau} - 1 that makes the phase linear in v.
        Returns (I, achieved absolute error).
        """
        dc.require(Regime.BROKEN, operation='eb1')
        if t < 0:
            raise ParameterError("times must be nonnegative")
        if chi == 0 or t == 0:
            return 0j, 0.0
        epsrel = get_setting('EB1_EPSREL') if epsrel is None else epsrel
        panel_cap = get_setting('EB1_PANEL_CAP') if panel_cap is None else panel_cap
        lam = dc.lambda_.real
        prefactor = (dc.kappa / lam) * (dc.j_coupling / (2 * lam)) ** 2
        omega = dc.zeta1.real * dc.zeta2.real * chi / (2 * lam)
        value, abserr, panels = NonlinearAnalyticsService._oscillatory_integral(
            omega, 0.0, float(np.expm1(2 * lam * t)), epsrel, panel_cap,
        )
        scale = prefactor / (2 * lam)
        logger.debug("EB1 integral t=%s panels=%d abserr=%.3g", t, panels, abserr * scale)
        return value * scale, abserr * scale

    @staticmethod
    def eb1(dc, chi, alpha0, t):
        """Noise-correction term i zeta2 chi I(t) EB0(t)."""
        integral, _ = NonlinearAnalyticsService.eb1_integral(dc, chi, t)
        if integral == 0:
            return 0j
        return complex(1j * dc.zeta2.real * chi * integral * NonlinearAnalyticsService.eb0(dc, chi, alpha0, t))

    @staticmethod
    def eb1_integral_series(dc, chi, t_grid, epsrel=None, panel_cap=None):
        """
        I(t) on a sorted time grid. The integral is accumulated between consecutive
        samples so the whole series costs about as much as its last point.
        """
        dc.require(Regime.BROKEN, operation='eb1')
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.ndim != 1 or np.any(np.diff(t_grid) < 0) or (t_grid.size and t_grid[0] < 0):
            raise ParameterError("EB1 series needs a sorted nonnegative time grid")
        integrals = np.zeros(t_grid.shape, dtype=complex)
        if chi == 0:
            return integrals
        epsrel = get_setting('EB1_EPSREL') if epsrel is None else epsrel
        panel_cap = get_setting('EB1_PANEL_CAP') if panel_cap is None else panel_cap
        lam = dc.lambda_.real
        prefactor = (dc.kappa / lam) * (dc.j_coupling / (2 * lam)) ** 2
        omega = dc.zeta1.real * dc.zeta2.real * chi / (2 * lam)

        running, v_prev = 0j, 0.0
        for k, v in enumerate(np.expm1(2 * lam * t_grid)):
            if v > v_prev:
                piece, _, _ = NonlinearAnalyticsService._oscillatory_integral(
                    omega, v_prev, float(v), epsrel, panel_cap,
                )
                running += piece
                v_prev = float(v)
            integrals[k] = running
        return integrals * (prefactor / (2 * lam))

    @staticmethod
    def eb1_series(dc, chi, alpha0, t_grid):
        """EB1 on a sorted time grid."""
        integrals = NonlinearAnalyticsService.eb1_integral_series(dc, chi, t_grid)
        if chi == 0:
            return integrals
        eb0 = np.asarray(NonlinearAnalyticsService.eb0(dc, chi, alpha0, np.asarray(t_grid, dtype=float)))
        return 1j * dc.zeta2.real * chi * integrals * eb0

    @staticmethod
    def mean_b(dc, chi, alpha0, t, variant=Variant.NOISY, include_eb1=True):
        """<b(t)>: EB0 + EB1 for NOISY, the non-Hermitian evolution for NOISELESS."""
        dc.require(Regime.BROKEN, operation='mean_b')
        variant = Variant(variant)
        if variant is Variant.NOISELESS:
            mode = NonlinearAnalyticsService.normalized_mode(dc, alpha0)
            phases = NonlinearAnalyticsService.phase_functions(dc, chi, t, variant)
            value = NonlinearAnalyticsService._growing_amplitude(dc, alpha0, t) * np.exp(
                abs(mode.alpha_tilde) ** 2 * expm1_i(np.asarray(phases.theta))
            )
            return _scalar(value)

        t_arr = np.asarray(t, dtype=float)
        value = np.asarray(NonlinearAnalyticsService.eb0(dc, chi, alpha0, t_arr))
        if include_eb1 and chi != 0:
            if t_arr.ndim == 0:
                value = value + NonlinearAnalyticsService.eb1(dc, chi, alpha0, float(t_arr))
            else:
                value = value + NonlinearAnalyticsService.eb1_series(dc, chi, alpha0, t_arr)
        return _scalar(value)

    @staticmethod
    def _a_over_b(dc):
        if dc.j_coupling < get_setting('J_LIMIT_THRESHOLD') * dc.kappa:
            raise ParameterError("gain-channel moments are undefined for a decoupled coupler (J = 0)")
        return 1j * dc.eta2.real / dc.j_coupling

    @staticmethod
    def mean_a(dc, chi, alpha0, t, variant=Variant.NOISY, include_eb1=True):
        """<a(t)> = i (eta2/J) <b(t)>."""
        dc.require(Regime.BROKEN, operation='mean_a')
        ratio = NonlinearAnalyticsService._a_over_b(dc)
        return _scalar(ratio * np.asarray(
            NonlinearAnalyticsService.mean_b(dc, chi, alpha0, t, variant, include_eb1)
        ))

    @staticmethod
    def quadrature_mean(mean_c, phi):
        """<X_c(phi)> = Re(<c> e^{-i phi}); phi = 0 gives X, phi = pi/2 gives P."""
        return _scalar(np.real(np.asarray(mean_c) * np.exp(-1j * phi)))

    @staticmethod
    def _linear_b_series(dc, alpha0, t_grid):
        return np.asarray(LinearCouplerService.linear_mean_modes(dc, alpha0, t_grid).mean_b, dtype=complex)

    @staticmethod
    def perturbative_correction(dc, chi, alpha0, t, wick_noise=True, epsrel=1e-10,
                                commutator=CommutatorVariant.FULL):
        """
        First-order Kerr corrections (delta<a(t)>, delta<b(t)>):
        delta<c(t)> = -i chi integral_0^t c_cb(t, tau) [|B|^2 B + 2 N_b B](tau) dtau,
        with B the linear loss-channel mean and N_b its spontaneous occupation.
        wick_noise=False keeps only the coherent |B|^2 B source.

        commutator=GROWING_ONLY (BROKEN regime) swaps in the growing-mode
        commutators, the growing part of B and sigma for N_b. That is the model
        mean_b is built on, so the two agree to first order in chi.
        """
        dc.require_analytic('perturbative_correction')
        commutator = CommutatorVariant(commutator)
        growing = commutator is CommutatorVariant.GROWING_ONLY
        if growing:
            dc.require(Regime.BROKEN, operation='perturbative_correction')
        if t < 0:
            raise ParameterError("times must be nonnegative")
        alpha0 = complex(alpha0)
        if chi == 0 or alpha0 == 0 or t == 0:
            return 0j, 0j

        def integrand(tau):
            if growing:
                b_lin = complex(NonlinearAnalyticsService._growing_amplitude(dc, alpha0, tau))
                noise = LinearCouplerService.sigma(dc, tau)
                column = np.array([
                    LinearCouplerService.commutator(dc, CommutatorKind(pair, commutator), t, tau)
                    for pair in (Pair.AB, Pair.BB)
                ])
            else:
                b_lin = complex(LinearCouplerService.linear_mean_modes(dc, alpha0, tau).mean_b)
                noise = LinearCouplerService.noise_occupation(dc, Channel.B, tau)
                column = LinearCouplerService.commutator_matrix(dc, t, tau)[:, 1]
            source = abs(b_lin) ** 2 * b_lin
            if wick_noise:
                source += 2 * noise * b_lin
            delta = -1j * chi * column * source
            return np.array([delta[0].real, delta[0].imag, delta[1].real, delta[1].imag])

        value, abserr = integrate.quad_vec(integrand, 0.0, float(t), epsrel=epsrel)
        if not np.all(np.isfinite(value)):
            raise QuadratureError(f"perturbative correction diverged at t={t}", abserr)
        return complex(value[0], value[1]), complex(value[2], value[3])

    @staticmethod
    def perturbative_series(dc, chi, alpha0, t_grid, wick_noise=True, epsrel=1e-10):
        """
        The same corrections on a sorted grid. Uses c(t, tau) = G(t) G(-tau) so the
        tau integral is accumulated once across the grid. PT-symmetric regime only,
        where G(-tau) stays bounded.
        """
        dc.require(Regime.PT_SYMMETRIC, operation='perturbative_series')
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.ndim != 1 or np.any(np.diff(t_grid) < 0) or (t_grid.size and t_grid[0] < 0):
            raise ParameterError("perturbative series needs a sorted nonnegative time grid")
        delta_a = np.zeros(t_grid.shape, dtype=complex)
        delta_b = np.zeros(t_grid.shape, dtype=complex)
        alpha0 = complex(alpha0)
        if chi == 0 or alpha0 == 0:
            return delta_a, delta_b

        def integrand(tau):
            b_lin = complex(LinearCouplerService.linear_mean_modes(dc, alpha0, tau).mean_b)
            source = abs(b_lin) ** 2 * b_lin
            if wick_noise:
                source += 2 * LinearCouplerService.noise_occupation(dc, Channel.B, tau) * b_lin
            column = LinearCouplerService.propagator(dc, -tau)[:, 1] * source
            return np.array([column[0].real, column[0].imag, column[1].real, column[1].imag])

        running, t_prev = np.zeros(4), 0.0
        for k, t in enumerate(t_grid):
            if t > t_prev:
                piece, abserr = integrate.quad_vec(integrand, t_prev, float(t), epsrel=epsrel)
                if not np.all(np.isfinite(piece)):
                    raise QuadratureError(f"perturbative correction diverged at t={t}", abserr)
                running = running + piece
                t_prev = float(t)
            w = np.array([running[0] + 1j * running[1], running[2] + 1j * running[3]])
            delta = -1j * chi * (LinearCouplerService.propagator(dc, t) @ w)
            delta_a[k], delta_b[k] = delta
        return delta_a, delta_b

    @staticmethod
    def second_order_correction(dc, chi, alpha0, t, wick_noise=True, rtol=1e-10):
        """
        Kerr corrections through second order in chi, PT-symmetric regime:

            v1' = M v1 - i e_b (|B|^2 + 2 N_b) B
            v2' = M v2 - i e_b [2 (|B|^2 + N_b) v1_b + B^2 conj(v1_b)]

        from v1 = v2 = 0, with delta = chi v1 + chi^2 v2. For a real alpha0 the
        first order is real in the loss channel and leaves <P_B> unchanged; the
        second order carries the quadrature shift. Accepts a scalar t or a sorted
        grid and returns a KerrCorrection.
        """
        dc.require(Regime.PT_SYMMETRIC, operation='second_order_correction')
        t_arr = np.asarray(t, dtype=float)
        grid = np.atleast_1d(t_arr)
        if grid.ndim != 1 or np.any(np.diff(grid) < 0) or (grid.size and grid[0] < 0):
            raise ParameterError("second-order correction needs a sorted nonnegative time grid")
        alpha0 = complex(alpha0)

        if chi == 0 or alpha0 == 0 or not grid.size or grid[-1] == 0:
            parts = [np.zeros(grid.shape, dtype=complex) for _ in range(4)]
        else:
            drift = LinearCouplerService.drift_matrix(dc)

            def rhs(tau, y):
                b_lin = complex(LinearCouplerService.linear_mean_modes(dc, alpha0, tau).mean_b)
                noise = LinearCouplerService.noise_occupation(dc, Channel.B, tau) if wick_noise else 0.0
                power = abs(b_lin) ** 2
                dy = np.concatenate([drift @ y[:2], drift @ y[2:]])
                dy[1] += -1j * (power + 2 * noise) * b_lin
                dy[3] += -1j * (2 * (power + noise) * y[1] + b_lin ** 2 * np.conj(y[1]))
                return dy

            scale = max(abs(alpha0), 1.0)
            atol = 1e-14 * np.array([scale ** 3, scale ** 3, scale ** 5, scale ** 5])
            solution = integrate.solve_ivp(
                rhs, (0.0, float(grid[-1])), np.zeros(4, dtype=complex),
                method='DOP853', t_eval=grid, rtol=rtol, atol=atol,
            )
            if not solution.success or not np.all(np.isfinite(solution.y)):
                raise QuadratureError(f"second-order correction failed: {solution.message}")
            v = solution.y
            parts = [chi * v[0], chi * v[1], chi ** 2 * v[2], chi ** 2 * v[3]]
            logger.debug("second-order correction: %d samples, %d rhs calls", grid.size, solution.nfev)

        if t_arr.ndim == 0:
            parts = [complex(p[0]) for p in parts]
        return KerrCorrection(*parts)

    @staticmethod
    def linear_rms_p_quadrature(dc, alpha0):
        """RMS of the linear <P_B> over one oscillation period 2 pi / Omega."""
        dc.require(Regime.PT_SYMMETRIC, operation='linear_rms_p_quadrature')
        # Im(-i J alpha0 sin(Omega t) / Omega) = -J Re(alpha0) sin(Omega t) / Omega
        return dc.j_coupling * abs(complex(alpha0).real) / (dc.omega * np.sqrt(2.0))

    @staticmethod
    def change_ratio(dc, chi, alpha0, t, variant=Variant.NOISY, include_eb1=True):
        """
        Relative change of <P_B> caused by the Kerr term. BROKEN compares against the
        chi = 0 closed form at the same time; PT_SYMMETRIC uses the correction through
        second order in chi over the RMS of the linear quadrature, and NOISELESS there
        drops the Wick noise source. Accepts a scalar t or a sorted time grid.
        """
        variant = Variant(variant)
        dc.require_analytic('change_ratio')
        t_arr = np.asarray(t, dtype=float)
        if dc.regime is Regime.BROKEN:
            reference = np.imag(np.asarray(NonlinearAnalyticsService.mean_b(dc, 0.0, alpha0, t_arr, variant)))
            if chi == 0:
                return _scalar(np.zeros_like(reference, dtype=float))
            value = np.imag(np.asarray(
                NonlinearAnalyticsService.mean_b(dc, chi, alpha0, t_arr, variant, include_eb1)
            ))
            denom = np.abs(reference)
            if np.any(denom < 1e-300):
                raise UndefinedRatioError("linear <P_B> vanishes; change ratio undefined")
            return _scalar(np.abs(value - reference) / denom)

        denom = NonlinearAnalyticsService.linear_rms_p_quadrature(dc, alpha0)
        if denom < 1e-300:
            raise UndefinedRatioError("RMS of the linear <P_B> vanishes; change ratio undefined")
        correction = NonlinearAnalyticsService.second_order_correction(
            dc, chi, alpha0, t_arr, wick_noise=variant is Variant.NOISY,
        )
        return _scalar(np.abs(np.imag(np.asarray(correction.delta_b))) / denom)

    @staticmethod
    def second_moment_bb(dc, chi, alpha0, t, variant=Variant.NOISY):
        """<b^2> = e^{2 lambda t} e^{2is} e^{i theta} o2^2 exp(|alpha_tilde|^2 (e^{2 i theta} - 1))."""
        dc.require(Regime.BROKEN, operation='second_moment_bb')
        mode = NonlinearAnalyticsService.normalized_mode(dc, alpha0)
        phases = NonlinearAnalyticsService.phase_functions(dc, chi, t, variant)
        theta = np.asarray(phases.theta)
        value = (
            NonlinearAnalyticsService._growing_amplitude(dc, alpha0, t) ** 2
            * np.exp(2j * np.asarray(phases.s_scalar) + 1j * theta)
            * np.exp(abs(mode.alpha_tilde) ** 2 * expm1_i(2 * theta))
        )
        return _scalar(value)

    @staticmethod
    def photon_number(dc, chi, alpha0, channel, t, variant=Variant.NOISY):
        """
        Photon numbers from the growing linear component; the Kerr phase cancels in
        these main terms so chi does not enter. NOISY adds the spontaneous photons.
        """
        dc.require(Regime.BROKEN, operation='photon_number')
        variant = Variant(variant)
        channel = Channel(channel)
        t = np.asarray(t, dtype=float)
        lam = dc.lambda_.real
        growth = np.exp(2 * lam * t)
        if channel is Channel.B:
            _, o2 = LinearCouplerService.mode_amplitudes(dc, alpha0)
            value = growth * abs(o2) ** 2
        else:
            # (eta2/J)^2 |o2|^2, written without the 1/J
            value = growth * abs(dc.eta2.real * complex(alpha0) / (2 * lam)) ** 2
        if variant is Variant.NOISY:
            value = value + LinearCouplerService.noise_occupation(dc, channel, t)
        return _scalar(value)

    @staticmethod
    def overlap_factor(dc, chi, alpha0, t):
        """Input-state overlap exp(|alpha_tilde|^2 (e^{i theta_noisy} - 1))."""
        dc.require(Regime.BROKEN, operation='overlap_factor')
        mode = NonlinearAnalyticsService.normalized_mode(dc, alpha0)
        phases = NonlinearAnalyticsService.phase_functions(dc, chi, t, Variant.NOISY)
        return _scalar(np.exp(abs(mode.alpha_tilde) ** 2 * expm1_i(np.asarray(phases.theta))))

    @staticmethod
    def eb1_overlap_measure(dc, chi, alpha0, t):
        """
        |EB1/EB0 * overlap|, the relative weight of the noise correction. EB1/EB0 is
        i zeta2 chi I(t), so the ratio is taken without dividing by EB0.
        Accepts a scalar t or a sorted time grid.
        """
        dc.require(Regime.BROKEN, operation='eb1_overlap_measure')
        t_arr = np.asarray(t, dtype=float)
        overlap = np.abs(np.asarray(NonlinearAnalyticsService.overlap_factor(dc, chi, alpha0, t_arr)))
        if chi == 0:
            return _scalar(np.zeros_like(overlap))
        if t_arr.ndim == 0:
            integral, _ = NonlinearAnalyticsService.eb1_integral(dc, chi, float(t_arr))
        else:
            integral = NonlinearAnalyticsService.eb1_integral_series(dc, chi, t_arr)
        ratio = np.abs(dc.zeta2.real * chi * np.asarray(integral))
        return _scalar(ratio * overlap)

    @staticmethod
    def noise_factor(dc, chi, t, variant=Variant.NOISY, include_eb1=True):
        """
        g = 1 + EB1/EB0 = 1 + i zeta2 chi I(t) for NOISY with EB1, otherwise 1.
        <b> carries g, <b^2> and <db db> carry g^2, <db^dagger db> carries |g|^2.
        """
        t_arr = np.asarray(t, dtype=float)
        if Variant(variant) is Variant.NOISELESS or not include_eb1 or chi == 0:
            return _scalar(np.ones(t_arr.shape, dtype=complex))
        if t_arr.ndim == 0:
            integral, _ = NonlinearAnalyticsService.eb1_integral(dc, chi, float(t_arr))
        else:
            integral = NonlinearAnalyticsService.eb1_integral_series(dc, chi, t_arr)
        return _scalar(1 + 1j * dc.zeta2.real * chi * np.asarray(integral))

    @staticmethod
    def _growing_moments(dc, chi, alpha0, t_grid, variant, include_eb1):
        """
        (<b>, <b^2>, <db^dagger db>, <db db>) of the growing loss-channel component.
        For the normalized mode with x = |alpha_tilde|^2 and E = exp(x (e^{i theta} - 1)):

            <dc^dagger dc> = -x expm1(-4 x sin^2(theta/2))
            <dc dc>        = alpha_tilde^2 E^2 expm1(i theta + x (e^{i theta} - 1)^2)

        Near the coherent limit both vanish like theta, so they are never formed as
        differences of the raw moments.
        """
        mode = NonlinearAnalyticsService.normalized_mode(dc, alpha0)
        phases = NonlinearAnalyticsService.phase_functions(dc, chi, t_grid, variant)
        theta = np.asarray(phases.theta, dtype=float)
        spin = np.exp(1j * np.asarray(phases.s_scalar, dtype=float))
        x = abs(mode.alpha_tilde) ** 2
        amplitude = np.asarray(NonlinearAnalyticsService._growing_amplitude(dc, alpha0, t_grid))
        overlap = np.exp(x * expm1_i(theta))
        g = np.asarray(NonlinearAnalyticsService.noise_factor(dc, chi, t_grid, variant, include_eb1))

        mean_b = g * spin * amplitude * overlap
        bb = g ** 2 * np.asarray(NonlinearAnalyticsService.second_moment_bb(dc, chi, alpha0, t_grid, variant))
        fluct_b = abs(g) ** 2 * abs(amplitude) ** 2 * -np.expm1(-4 * x * np.sin(theta / 2) ** 2)

        exponent = 1j * theta + x * expm1_i(theta) ** 2
        near = np.abs(exponent) < 1.0
        # past the coherent regime exp(exponent) can overflow while E^2 underflows
        excess = np.where(
            near,
            overlap ** 2 * np.expm1(np.where(near, exponent, 0.0)),
            np.exp(1j * theta + x * expm1_i(2 * theta)) - overlap ** 2,
        )
        fluct_bb = (g * spin * amplitude) ** 2 * excess
        return mean_b, bb, fluct_b, fluct_bb

    @staticmethod
    def moments(dc, chi, alpha0, t, variant=Variant.NOISY, include_eb1=True):
        """Every moment the determinant consumes, at one time point."""
        series = NonlinearAnalyticsService.moments_series(dc, chi, alpha0, [float(t)], variant, include_eb1)
        return series.moment_at(0)

    @staticmethod
    def moments_series(dc, chi, alpha0, t_grid, variant=Variant.NOISY, include_eb1=True):
        """
        Moments over a sorted grid, returned as a TimeSeries. Means and second
        moments carry the same Kerr phase and EB1 factor. The fluctuation cumulants
        come from the growing component; spontaneous photons enter n_a and n_b only.
        """
        dc.require(Regime.BROKEN, operation='moments')
        variant = Variant(variant)
        t_grid = np.asarray(t_grid, dtype=float)
        ratio = NonlinearAnalyticsService._a_over_b(dc)
        mean_b, bb, fluct_b, fluct_bb = NonlinearAnalyticsService._growing_moments(
            dc, chi, alpha0, t_grid, variant, include_eb1,
        )
        ab = ratio * bb
        series = TimeSeries(t=t_grid, meta={'variant': variant.value, 'include_eb1': include_eb1})
        series.add('a', ratio * mean_b)
        series.add('b', mean_b)
        series.add('n_a', np.asarray(NonlinearAnalyticsService.photon_number(dc, chi, alpha0, Channel.A, t_grid, variant)))
        series.add('n_b', np.asarray(NonlinearAnalyticsService.photon_number(dc, chi, alpha0, Channel.B, t_grid, variant)))
        series.add('ab', ab)
        series.add('adag_bdag', np.conj(ab))
        series.add('bb', bb)
        series.add('fluct_a', abs(ratio) ** 2 * fluct_b)
        series.add('fluct_b', fluct_b)
        series.add('fluct_ab', ratio * fluct_bb)
        return series

    @staticmethod
    def d3_series(series, epsilon=None):
        """D3 for every sample of a moment series."""
        return np.array([
            NonlinearAnalyticsService.d3(series.moment_at(k), epsilon) for k in range(len(series))
        ])

    @staticmethod
    def d3(moments, epsilon=None):
        """
        Normalized third-order moment determinant; negative values witness
        entanglement. It equals

            (<da^dagger da> <db^dagger db> - |<da db>|^2) / (n_a n_b),

        which is used directly when the moment set carries fluctuation cumulants.
        Otherwise the raw moments are scaled by sqrt(n) before combining so the
        large-amplitude terms do not overflow or cancel catastrophically.
        """
        epsilon = get_setting('D3_EPSILON') if epsilon is None else epsilon
        n_a, n_b = moments.n_a, moments.n_b
        if not n_a * n_b > epsilon:
            raise UndefinedD3Error(f"photon-number product {n_a * n_b:.3g} too small to normalize D3")
        if moments.has_fluctuations:
            value = (moments.fluct_a / n_a) * (moments.fluct_b / n_b) - abs(
                moments.fluct_ab / np.sqrt(n_a * n_b)
            ) ** 2
            return float(value)

        a_hat = moments.mean_a / np.sqrt(n_a)
        b_hat = moments.mean_b / np.sqrt(n_b)
        norm = np.sqrt(n_a) * np.sqrt(n_b)
        g_hat = moments.ab / norm
        g_dag_hat = moments.adag_bdag / norm
        value = (
            1.0
            + a_hat * b_hat * g_dag_hat
            + np.conj(a_hat) * np.conj(b_hat) * g_hat
            - abs(a_hat) ** 2
            - abs(b_hat) ** 2
            - abs(g_hat) ** 2
        )
        if abs(value.imag) > 1e-10:
            raise NumericalConsistencyError(f"D3 carries an imaginary residue {value.imag:.3g}")
        return float(value.real)
