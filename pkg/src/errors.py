"""Exception hierarchy for the gSQG laboratory."""

from typing import Optional, Tuple


class GSQGError(Exception):
    """Base class for all laboratory errors."""


class KernelDomainError(GSQGError, ValueError):
    """A kernel or symbol was evaluated outside its domain (z = 0, alpha out of range, ...)."""


class CoincidentVorticesError(GSQGError, ValueError):
    """Two point vortices occupy the same position."""

    def __init__(self, pair: Tuple[int, int], message: Optional[str] = None):
        self.pair = pair
        super().__init__(message or f"vortices {pair[0]} and {pair[1]} coincide")


class SolverInstabilityError(GSQGError, RuntimeError):
    """The spectral solution grew too fast in a single step."""


class ResolutionError(GSQGError, ValueError):
    """A blob or rescaled field is not resolved by the grid."""


class SupportOverlapError(GSQGError, ValueError):
    """Blob supports are not pairwise separated."""


class CutoffSupportError(GSQGError, ValueError):
    """A cutoff support leaves the central sub-box."""


class AdmissibilityError(GSQGError, ValueError):
    """A parameter combination violates an admissibility condition."""


class ConfigError(GSQGError, ValueError):
    """A run configuration is malformed or invalid."""
