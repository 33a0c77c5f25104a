# Error types shared by every WillmoreLab module
#
# ConfigError covers anything the user got wrong (CLI exit code 1),
# NumericalError everything the numerics could not deliver (exit code 2).

from typing import Any, Optional


class WillmoreLabError(Exception):
    """Base class for all WillmoreLab errors."""


class ConfigError(WillmoreLabError, ValueError):
    """Invalid configuration, family document or argument."""


class NumericalError(WillmoreLabError):
    """A numerical operation failed to produce a trustworthy result."""


class NonPositiveDefinite(NumericalError):
    """Metric is not positive definite (epsilon beyond the validity bound)."""


class ChartSingularity(NumericalError):
    """Point lies on the excluded antipode of a stereographic chart."""


class FiniteDifferenceStepUnderflow(NumericalError):
    """Finite-difference step fell below the usable floor."""


class NonConvergentDerivative(NumericalError):
    """Richardson levels of a derivative disagree beyond tolerance."""


class IntegratorFailure(NumericalError):
    """The geodesic / Jacobi ODE integration did not complete."""


class GraphTooLarge(NumericalError):
    """Normal graph leaves the admissible band around the geodesic sphere."""


class KernelComponentPresent(NumericalError):
    """Input to the inverse second variation has l <= 1 content."""


class StepTooLarge(NumericalError):
    """Finite-difference noise dominates a variation identity."""


class NoConvergence(NumericalError):
    """Iteration stopped without meeting its tolerance.

    The best iterate found so far is kept on ``best`` so callers can still
    report it.
    """

    def __init__(self, message: str, best: Optional[Any] = None) -> None:
        super().__init__(message)
        self.best = best


class WindowCollapse(NumericalError):
    """Maximizer of the reduced functional sits on the rho-window boundary."""

    def __init__(self, message: str, incumbent: Optional[Any] = None) -> None:
        super().__init__(message)
        self.incumbent = incumbent


class FitIllConditioned(NumericalError):
    """Polynomial fit in epsilon is too poorly conditioned to read off k0."""


class ExpInversionFailure(NumericalError):
    """Newton inversion of the exponential map did not converge."""
