class CouplerError(Exception):
    """Base class for every failure the simulator reports. exit_code is the CLI status."""
    exit_code = 1


class ConfigError(CouplerError):
    exit_code = 2


class ParameterError(ConfigError, ValueError):
    """Physical parameters or truncation dimensions violate their invariants."""


class GridMismatchError(ConfigError):
    pass


class TruncationError(CouplerError):
    """Oracle leakage exceeded the threshold. Carries the sample time of failure."""
    exit_code = 3

    def __init__(self, message, t=None, leakage=None):
        super().__init__(message)
        self.t = t
        self.leakage = leakage


class HorizonError(TruncationError):
    """The requested horizon lets the gain channel outgrow the Fock basis."""


class StabilityError(CouplerError):
    exit_code = 3


class RegimeError(CouplerError):
    exit_code = 4


class QuadratureError(CouplerError):
    def __init__(self, message, abserr=None):
        super().__init__(message)
        self.abserr = abserr


class UndefinedRatioError(CouplerError):
    pass


class UndefinedD3Error(CouplerError):
    pass


class DivergenceError(CouplerError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NumericalConsistencyError(CouplerError):
    pass
