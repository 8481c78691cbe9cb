"""
Exception hierarchy for the optimization toolkit.
"""
from typing import List, Optional, Any


class FoboError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FoboError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, token: Optional[str] = None):
        super().__init__(message)
        self.token = token


class NumericalError(FoboError):
    """A kernel matrix could not be factorized even with the largest jitter."""

    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


class FitError(FoboError):
    """Every hyperparameter restart failed to produce a finite likelihood."""


class OptimizationError(FoboError):
    """The objective is not finite at the optimizer's start point."""


class EvaluationError(FoboError):
    """The black-box objective failed during a run.

    Args:
        message: Description of the failure.
        trace: The regret trace recorded before the failure.
    """

    def __init__(self, message: str, trace: Any = None):
        super().__init__(message)
        self.trace = trace


class PlotError(FoboError):
    """Bad inputs to the regret plot."""

    def __init__(self, message: str, files: Optional[List[str]] = None):
        super().__init__(message)
        self.files = files or []
