"""Exception hierarchy shared by every package.

ScenarioError and its subclasses map to CLI exit status 2, NumericalError
and its subclasses to exit status 3.
"""
from typing import List, Optional


class FkppError(Exception):
    exit_code = 1


class ScenarioError(FkppError):
    exit_code = 2

    def __init__(self, message: str, field_path: Optional[str] = None):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


class NumericalError(FkppError):
    exit_code = 3


class KernelError(NumericalError):
    pass


class ReactionError(NumericalError):
    pass


class GridError(ScenarioError):
    pass


class TailFitError(NumericalError):
    pass


class BackendError(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass


class EigenSolverError(NumericalError):
    def __init__(self, message: str, residual_history: Optional[List[float]] = None):
        self.residual_history = list(residual_history or [])
        super().__init__(message)


class NoInvasionError(NumericalError):
    pass


class EvolutionError(NumericalError):
    def __init__(self, message: str, residual_history: Optional[List[float]] = None):
        self.residual_history = list(residual_history or [])
        super().__init__(message)


class BlowUpError(EvolutionError):
    pass


class EnvelopeError(NumericalError):
    pass


class ProbeError(NumericalError):
    pass


class FrontError(NumericalError):
    pass
