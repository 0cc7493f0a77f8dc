"""Exception hierarchy shared by every module of the package."""


class RenyiLangevinError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatchError(RenyiLangevinError, ValueError):
    pass


class NonFiniteError(RenyiLangevinError, ValueError):
    pass


class UnsupportedError(RenyiLangevinError, ValueError):
    """Raised when an operation is called on a geometry it is not defined for."""


class CurvatureConventionError(RenyiLangevinError, ValueError):
    """Ric_{n,n}(L) is only defined for constant f."""


class NumericalConsistencyError(RenyiLangevinError, ArithmeticError):
    """Two algebraically equal discrete quantities disagree beyond tolerance."""


class ConfigurationError(RenyiLangevinError, ValueError):
    pass


class DomainError(RenyiLangevinError, ValueError):
    pass


class BlowUpError(RenyiLangevinError, ArithmeticError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DegeneracyError(BlowUpError):
    """b(t) crossed zero; the W-entropy normalisation 1/b is undefined there."""


class SolverError(RenyiLangevinError, RuntimeError):
    def __init__(self, message, time=None, suggested_dt=None):
        super().__init__(message)
        self.time = time
        self.suggested_dt = suggested_dt
        # the samples gathered before the failure, attached by the integrators
        self.trajectory = None


class CFLError(SolverError):
    pass


class VacuumError(SolverError):
    pass


class CausticError(SolverError):
    pass


class SparseTrajectoryError(RenyiLangevinError, ValueError):
    pass
