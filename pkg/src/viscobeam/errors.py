"""Exception hierarchy shared across the package."""


class ViscobeamError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ViscobeamError):
    """Invalid model/run configuration (unknown kind, bad parameter)."""


class DomainError(ViscobeamError):
    """Input outside the admissible domain (e.g. far from SO(3), det <= 0)."""


class ShapeError(ViscobeamError):
    """Mismatched meshes, grids, or array shapes."""


class DegenerateFormError(ViscobeamError):
    """Singular block encountered while reducing a quadratic form."""


class MetricDegeneracyError(ViscobeamError):
    """Metric tensor failed to factor as positive definite."""


class NonconvergenceError(ViscobeamError):
    """Inner solver did not reach tolerance; carries the best iterate."""

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class ProjectionError(ViscobeamError):
    """Matrix outside the tubular neighborhood of SO(3)."""
