"""Exception types shared across the package."""


class RankMfpError(Exception):
    """Base class for all package errors."""


class DomainError(RankMfpError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(RankMfpError, ValueError):
    """A configuration value violates a validity requirement."""


class ConvergenceError(RankMfpError, RuntimeError):
    """An iterative procedure failed to converge; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StagnationError(ConvergenceError):
    """The step size collapsed below the workable floor."""


class InvalidTestFunctionError(RankMfpError, ValueError):
    """A candidate test function violates admissibility requirements."""


class InvalidManufacturedSolutionError(RankMfpError, ValueError):
    """A manufactured potential violates positivity or boundary matching."""


class DegenerateDensityError(RankMfpError, ValueError):
    """Too many cells have near-zero density for a meaningful reconstruction."""
