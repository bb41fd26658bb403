"""Exception types shared across the package."""


class InterfaceLabError(Exception):
    """Base class for all package errors."""


class EmptyInterior(InterfaceLabError):
    """Discretization produced no interior node at the requested resolution."""


class CoefficientSignError(InterfaceLabError):
    """Coefficient vector violates positivity of the Fourier symbol on (0, 2)."""


class DimensionMismatch(InterfaceLabError):
    """Operator and grid function shapes are incompatible."""


class SolveFailure(InterfaceLabError):
    """Linear solve failed (factorization breakdown or residual too large)."""


class QuadratureNotConverged(InterfaceLabError):
    """Quadrature refinement stalled before reaching the requested tolerance."""


class NoConvergence(InterfaceLabError):
    """Iterative eigenvalue computation did not converge."""


class ConfigError(InterfaceLabError):
    """Experiment configuration is malformed or inconsistent."""


class ExperimentError(InterfaceLabError):
    """An experiment failed for a numerical reason; context in the message."""
