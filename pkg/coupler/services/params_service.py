import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..conf import get_setting
from ..exceptions import ParameterError, RegimeError

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    PT_SYMMETRIC = 'PT_SYMMETRIC'
    BROKEN = 'BROKEN'
    EXCEPTIONAL = 'EXCEPTIONAL'


@dataclass(frozen=True)
class CouplerParams:
    """
    Physical rates of the coupler. kappa is the balanced gain/loss rate, j_coupling
    the evanescent coupling, chi the Kerr coefficient of the loss channel and alpha0
    the coherent amplitude fed into the gain channel.

    kappa = 0 (lossless coupler) is accepted here; the command line requires kappa > 0
    because it reports everything in units of kappa.
    """
    kappa: float
    j_coupling: float
    chi: float = 0.0
    alpha0: complex = 0j

    def __post_init__(self):
        for name in ('kappa', 'j_coupling', 'chi'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be a finite nonnegative rate, got {value!r}")
            object.__setattr__(self, name, float(value))
        alpha0 = complex(self.alpha0)
        if not np.isfinite(alpha0):
            raise ParameterError(f"alpha0 must be finite, got {self.alpha0!r}")
        object.__setattr__(self, 'alpha0', alpha0)

    def normalized(self):
        """Returns the same coupler with all rates expressed in units of kappa."""
        if self.kappa <= 0:
            raise ParameterError("cannot normalize rates to kappa = 0")
        return CouplerParams(
            kappa=1.0,
            j_coupling=self.j_coupling / self.kappa,
            chi=self.chi / self.kappa,
            alpha0=self.alpha0,
        )

    def with_chi(self, chi):
        return CouplerParams(self.kappa, self.j_coupling, chi, self.alpha0)


@dataclass(frozen=True)
class DerivedConstants:
    kappa: float
    j_coupling: float
    lambda_: complex
    eta1: complex
    eta2: complex
    zeta1: complex
    zeta2: complex
    regime: Regime

    @property
    def omega(self):
        """Oscillation frequency of the linear coupler (zero outside the PT-symmetric regime)."""
        return abs(self.lambda_.imag)

    def require(self, *allowed, operation='this operation'):
        if self.regime not in allowed:
            names = ', '.join(r.value for r in allowed)
            raise RegimeError(f"{operation} needs regime {names}; got {self.regime.value}")

    def require_analytic(self, operation='this operation'):
        self.require(Regime.BROKEN, Regime.PT_SYMMETRIC, operation=operation)


class ParamsService:
    @staticmethod
    def classify_regime(params, tol=None):
        """
        PT_SYMMETRIC iff kappa < J(1 - tol), BROKEN iff kappa > J(1 + tol),
        otherwise EXCEPTIONAL.
        """
        tol = get_setting('EP_TOLERANCE') if tol is None else tol
        kappa, j = params.kappa, params.j_coupling
        if kappa < j * (1 - tol):
            return Regime.PT_SYMMETRIC
        if kappa > j * (1 + tol):
            return Regime.BROKEN
        return Regime.EXCEPTIONAL

    @staticmethod
    def derive_constants(params, tol=None):
        """
        Spectral constants of the linear coupler. lambda is the principal root of
        kappa^2 - J^2, so e^{lambda t} is always the growing (or positively rotating)
        component. At the exceptional point the zeta constants are NaN and the
        regime tag blocks every analytic operation.
        """
        regime = ParamsService.classify_regime(params, tol)
        kappa, j = params.kappa, params.j_coupling

        lam = complex(np.emath.sqrt((kappa - j) * (kappa + j)))
        eta1 = -kappa + lam
        eta2 = kappa + lam

        if regime is Regime.EXCEPTIONAL:
            logger.debug("kappa=%s J=%s sits on the exceptional point", kappa, j)
            zeta1 = zeta2 = complex(np.nan, np.nan)
        else:
            denom = (eta1 + eta2) ** 2
            zeta1 = (eta1 ** 2 + j ** 2) / denom
            zeta2 = (kappa / lam) * (eta1 ** 2 - j ** 2) / denom

        return DerivedConstants(
            kappa=kappa,
            j_coupling=j,
            lambda_=lam,
            eta1=eta1,
            eta2=eta2,
            zeta1=zeta1,
            zeta2=zeta2,
            regime=regime,
        )
