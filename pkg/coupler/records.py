"""
Value records shared by the analytic engines, the Fock oracle and the output layer.

Every engine reports results on the same TimeSeries layout so comparison and
serialization never need to know which engine produced a series.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

# Column order used when a full moment set is stored on a TimeSeries
MOMENT_COLUMNS = ('a', 'b', 'n_a', 'n_b', 'ab', 'adag_bdag', 'bb')
# Optional fluctuation cumulants, stored only when an engine computes them directly
FLUCTUATION_COLUMNS = ('fluct_a', 'fluct_b', 'fluct_ab')


@dataclass(frozen=True)
class MomentSet:
    """
    First and second moments of the two modes at one time point.
    adag_bdag defaults to the conjugate of ab.

    fluct_a, fluct_b and fluct_ab are <da^dagger da>, <db^dagger db> and <da db>
    with da = a - <a>. Engines that know them in closed form set all three;
    otherwise they stay None and consumers derive them from the raw moments.
    """
    mean_a: complex
    mean_b: complex
    n_a: float
    n_b: float
    ab: complex
    adag_bdag: complex | None = None
    bb: complex = 0j
    fluct_a: float | None = None
    fluct_b: float | None = None
    fluct_ab: complex | None = None

    def __post_init__(self):
        if self.adag_bdag is None:
            object.__setattr__(self, 'adag_bdag', complex(np.conj(self.ab)))
        given = [getattr(self, name) is not None for name in FLUCTUATION_COLUMNS]
        if any(given) and not all(given):
            raise ConfigError("fluctuation cumulants must be given together")

    @property
    def has_fluctuations(self):
        return self.fluct_ab is not None


@dataclass
class TimeSeries:
    t: np.ndarray
    columns: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim != 1:
            raise ConfigError("time grid must be one-dimensional")
        for name, values in list(self.columns.items()):
            self.add(name, values)

    def __len__(self):
        return self.t.size

    def add(self, name, values):
        values = np.asarray(values)
        if values.shape != self.t.shape:
            raise ConfigError(
                f"column '{name}' has shape {values.shape}, time grid has {self.t.shape}"
            )
        self.columns[name] = values
        return values

    def column(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise ConfigError(f"series has no column '{name}'") from None

    def moment_at(self, index):
        c = self.columns
        fluctuations = {}
        if all(name in c for name in FLUCTUATION_COLUMNS):
            fluctuations = {
                'fluct_a': float(np.real(c['fluct_a'][index])),
                'fluct_b': float(np.real(c['fluct_b'][index])),
                'fluct_ab': complex(c['fluct_ab'][index]),
            }
        return MomentSet(
            mean_a=complex(c['a'][index]),
            mean_b=complex(c['b'][index]),
            n_a=float(np.real(c['n_a'][index])),
            n_b=float(np.real(c['n_b'][index])),
            ab=complex(c['ab'][index]),
            adag_bdag=complex(c['adag_bdag'][index]) if 'adag_bdag' in c else None,
            bb=complex(c['bb'][index]) if 'bb' in c else 0j,
            **fluctuations,
        )

    @classmethod
    def from_moments(cls, t, moments, meta=None):
        series = cls(t=t, meta=dict(meta or {}))
        series.add('a', np.array([m.mean_a for m in moments], dtype=complex))
        series.add('b', np.array([m.mean_b for m in moments], dtype=complex))
        series.add('n_a', np.array([m.n_a for m in moments], dtype=float))
        series.add('n_b', np.array([m.n_b for m in moments], dtype=float))
        series.add('ab', np.array([m.ab for m in moments], dtype=complex))
        series.add('adag_bdag', np.array([m.adag_bdag for m in moments], dtype=complex))
        series.add('bb', np.array([m.bb for m in moments], dtype=complex))
        if moments and all(m.has_fluctuations for m in moments):
            series.add('fluct_a', np.array([m.fluct_a for m in moments], dtype=float))
            series.add('fluct_b', np.array([m.fluct_b for m in moments], dtype=float))
            series.add('fluct_ab', np.array([m.fluct_ab for m in moments], dtype=complex))
        return series


@dataclass
class SweepSurface:
    """
    A scalar observable on a (J/kappa, kappa t) grid. Rows follow j_axis.
    NaN cells carry a reason code in `reasons`; finite cells carry ''.
    """
    j_axis: np.ndarray
    t_axis: np.ndarray
    values: np.ndarray
    quantity: str
    reasons: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.j_axis = np.asarray(self.j_axis, dtype=float)
        self.t_axis = np.asarray(self.t_axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        shape = (self.j_axis.size, self.t_axis.size)
        if self.values.shape != shape:
            raise ConfigError(f"surface values have shape {self.values.shape}, axes imply {shape}")
        if self.reasons is None:
            self.reasons = np.full(shape, '', dtype=object)
        self.reasons = np.asarray(self.reasons, dtype=object)
        if self.reasons.shape != shape:
            raise ConfigError("reason-code matrix does not match the surface")
        unexplained = ~np.isfinite(self.values) & (self.reasons == '')
        if unexplained.any():
            raise ConfigError("surface has non-finite cells without a reason code")


@dataclass
class ScenarioConfig:
    """
    One validated run request. Rates are stored in units of kappa and every time
    is the dimensionless kappa t; `kappa` keeps the raw rate the request named.
    """
    name: str = ''
    kappa: float = 1.0
    j_over_kappa: float = 0.6
    chi_over_kappa: float = 0.0
    alpha0_re: float = 1.0
    alpha0_im: float = 0.0
    variant: str = 'LINEAR'
    quantity: str = 'moments'
    t_max: float = 5.0
    n_samples: int = 101
    include_eb1: bool = True
    sweep: dict | None = None
    oracle: dict | None = None
    output: str = ''
    fmt: str = 'CSV'

    @property
    def alpha0(self):
        return complex(self.alpha0_re, self.alpha0_im)

    def t_grid(self):
        return np.linspace(0.0, self.t_max, self.n_samples)

    def to_dict(self):
        return {
            'name': self.name,
            'kappa': self.kappa,
            'j_over_kappa': self.j_over_kappa,
            'chi_over_kappa': self.chi_over_kappa,
            'alpha0_re': self.alpha0_re,
            'alpha0_im': self.alpha0_im,
            'variant': self.variant,
            'quantity': self.quantity,
            't_max': self.t_max,
            'n_samples': self.n_samples,
            'include_eb1': self.include_eb1,
            'sweep': dict(self.sweep) if self.sweep else None,
            'oracle': dict(self.oracle) if self.oracle else None,
            'output': self.output,
            'fmt': self.fmt,
        }

    @classmethod
    def from_dict(cls, data):
        known = {name: data[name] for name in cls.__dataclass_fields__ if name in data}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        return cls(**known)
