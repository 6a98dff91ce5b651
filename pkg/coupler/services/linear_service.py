"""
Exact analytics of the chi = 0 coupler.

The linear propagator is G(s) = C(s) I + S(s) M with M = [[kappa, -iJ], [-iJ, -kappa]],
C(s) = cosh(lambda s) and S(s) = sinh(lambda s)/lambda. Both kernels are real in
either regime (cos and sin/Omega when lambda = i Omega), which is the form used
throughout this module. It is regular at J = 0, so no 1/J prefactor ever appears.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from ..exceptions import ParameterError, QuadratureError, RegimeError
from ..records import MomentSet
from .params_service import Regime

logger = logging.getLogger(__name__)


class Pair(str, Enum):
    AB = 'AB'
    BB = 'BB'


class CommutatorVariant(str, Enum):
    FULL = 'FULL'
    GROWING_ONLY = 'GROWING_ONLY'


@dataclass(frozen=True)
class CommutatorKind:
    pair: Pair
    variant: CommutatorVariant = CommutatorVariant.FULL


@dataclass(frozen=True)
class LinearModeMeans:
    mean_a: complex
    mean_b: complex


class Channel(str, Enum):
    A = 'A'
    B = 'B'


def _kernels(dc, s):
    """Real C(s) and S(s) of the linear propagator."""
    s = np.asarray(s, dtype=float)
    if dc.regime is Regime.BROKEN:
        lam = dc.lambda_.real
        return np.cosh(lam * s), np.sinh(lam * s) / lam
    omega = dc.omega
    return np.cos(omega * s), np.sin(omega * s) / omega


def _scalar(value):
    return value.item() if isinstance(value, np.ndarray) and value.ndim == 0 else value


class LinearCouplerService:
    @staticmethod
    def drift_matrix(dc):
        """M in d/dt (A, B) = M (A, B) for the noise-averaged linear coupler."""
        return np.array([[dc.kappa, -1j * dc.j_coupling], [-1j * dc.j_coupling, -dc.kappa]])

    @staticmethod
    def propagator(dc, s):
        """2x2 linear propagator G(s) for a scalar s."""
        dc.require_analytic('propagator')
        c, sk = _kernels(dc, float(s))
        return c * np.eye(2) + sk * LinearCouplerService.drift_matrix(dc)

    @staticmethod
    def linear_mean_modes(dc, alpha0, t):
        """
        Noise-averaged <A(t)>, <B(t)> for the coherent input alpha0 in the gain channel
        and vacuum in the loss channel. Accepts a scalar t or an array of times.
        """
        dc.require_analytic('linear_mean_modes')
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ParameterError("times must be nonnegative")
        c, s = _kernels(dc, t)
        alpha0 = complex(alpha0)
        mean_a = (c + dc.kappa * s) * alpha0
        mean_b = -1j * dc.j_coupling * s * alpha0
        return LinearModeMeans(
            mean_a=_scalar(np.asarray(mean_a, dtype=complex)),
            mean_b=_scalar(np.asarray(mean_b, dtype=complex)),
        )

    @staticmethod
    def mode_amplitudes(dc, alpha0):
        """Coefficients o1, o2 of the decaying and growing loss-channel components."""
        dc.require_analytic('mode_amplitudes')
        lam = dc.lambda_
        o1 = 1j * dc.j_coupling / (2 * lam) * complex(alpha0)
        o2 = -1j * dc.j_coupling / (2 * lam) * complex(alpha0)
        return o1, o2

    @staticmethod
    def commutator_matrix(dc, t, t_prime):
        """
        Full 2x2 matrix [v_i(t), v_j(t')^dagger] for v = (A, B), including the
        noise-integral contributions. Equal to the identity at t = t'.
        """
        dc.require_analytic('commutator')
        if t < 0 or t_prime < 0:
            raise ParameterError("times must be nonnegative")
        kappa, j = dc.kappa, dc.j_coupling
        lam = dc.lambda_
        m = np.array([[kappa, -1j * j], [-1j * j, -kappa]])
        d = np.diag([-1.0, 1.0])

        g_t = LinearCouplerService.propagator(dc, t)
        g_tp = LinearCouplerService.propagator(dc, t_prime)
        result = g_t @ g_tp.conj().T

        lower = min(t, t_prime)
        if lower > 0:
            u, dt = t + t_prime, t - t_prime
            i_ch = (np.sinh(lam * u) - np.sinh(lam * (u - 2 * lower))) / (2 * lam)
            i_sh = (np.cosh(lam * u) - np.cosh(lam * (u - 2 * lower))) / (2 * lam)
            k_cc = 0.5 * (i_ch + lower * np.cosh(lam * dt))
            k_ss = (i_ch - lower * np.cosh(lam * dt)) / (2 * lam ** 2)
            k_cs = (i_sh - lower * np.sinh(lam * dt)) / (2 * lam)
            k_sc = (i_sh + lower * np.sinh(lam * dt)) / (2 * lam)
            m_dag = m.conj().T
            noise = k_cc * d + k_cs * (d @ m_dag) + k_sc * (m @ d) + k_ss * (m @ d @ m_dag)
            result = result + 2 * kappa * noise
        return result

    @staticmethod
    def commutator(dc, kind, t, t_prime):
        """
        c_bb(t,t') = [B(t), B(t')^dagger] or c_ab(t,t') = [A(t), B(t')^dagger].
        GROWING_ONLY keeps only the e^{lambda|t-t'|} part and exists only in BROKEN.
        """
        if kind.variant is CommutatorVariant.GROWING_ONLY:
            if dc.regime is not Regime.BROKEN:
                raise RegimeError(
                    f"GROWING_ONLY commutators need regime BROKEN; got {dc.regime.value}"
                )
            c_bb = dc.zeta1 * np.exp(dc.lambda_ * abs(t - t_prime))
            if kind.pair is Pair.BB:
                return complex(c_bb)
            if dc.j_coupling == 0.0:
                return 0j
            return complex(1j * (dc.eta2 / dc.j_coupling) * c_bb)

        matrix = LinearCouplerService.commutator_matrix(dc, t, t_prime)
        row = 1 if kind.pair is Pair.BB else 0
        return complex(matrix[row, 1])

    @staticmethod
    def noise_occupation(dc, channel, t):
        """
        Spontaneously generated photons <dC^dagger dC>(t) for C in {A, B}.
        Only the amplification-noise contraction <xi_a xi_a^dagger> survives, so
        N_C(t) = 2 kappa * integral_0^t |G_Ca(s)|^2 ds, evaluated in closed form.
        """
        dc.require_analytic('noise_occupation')
        t = np.asarray(t, dtype=float)
        kappa, j = dc.kappa, dc.j_coupling
        lam2 = (dc.lambda_ ** 2).real
        c, s = _kernels(dc, t)
        cs = c * s
        if Channel(channel) is Channel.B:
            value = kappa * j ** 2 * (cs - t) / lam2
        else:
            value = 2 * kappa * (0.5 * (t + cs) + kappa * s ** 2 + kappa ** 2 * (cs - t) / (2 * lam2))
        return _scalar(np.maximum(np.asarray(value, dtype=float), 0.0))

    @staticmethod
    def noise_occupation_quad(dc, channel, t, epsrel=1e-10):
        """Same occupation by direct quadrature of |G_Ca(s)|^2; used to cross-check the closed forms."""
        dc.require_analytic('noise_occupation_quad')
        row = 0 if Channel(channel) is Channel.A else 1

        def integrand(s):
            return abs(LinearCouplerService.propagator(dc, s)[row, 0]) ** 2

        value, abserr = integrate.quad(integrand, 0.0, float(t), epsrel=epsrel, limit=200)
        if not np.isfinite(value) or abserr > max(1e-8, 1e-6 * abs(value)):
            raise QuadratureError(f"noise occupation quadrature did not converge at t={t}", abserr)
        return 2 * dc.kappa * value

    @staticmethod
    def sigma(dc, tau):
        """sigma(tau) = (kappa/lambda)(J/2 lambda)^2 (e^{2 lambda tau} - 1). BROKEN regime only."""
        dc.require(Regime.BROKEN, operation='sigma')
        lam = dc.lambda_.real
        prefactor = (dc.kappa / lam) * (dc.j_coupling / (2 * lam)) ** 2
        return _scalar(prefactor * np.expm1(2 * lam * np.asarray(tau, dtype=float)))

    @staticmethod
    def linear_moments(dc, alpha0, t):
        """Full chi = 0 moment set: coherent parts plus the spontaneous-photon occupations."""
        means = LinearCouplerService.linear_mean_modes(dc, alpha0, t)
        n_a = abs(means.mean_a) ** 2 + LinearCouplerService.noise_occupation(dc, Channel.A, t)
        n_b = abs(means.mean_b) ** 2 + LinearCouplerService.noise_occupation(dc, Channel.B, t)
        return MomentSet(
            mean_a=complex(means.mean_a),
            mean_b=complex(means.mean_b),
            n_a=float(n_a),
            n_b=float(n_b),
            ab=complex(means.mean_a * means.mean_b),
            bb=complex(means.mean_b ** 2),
        )
