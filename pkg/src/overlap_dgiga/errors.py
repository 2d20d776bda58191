"""Exception hierarchy shared by all modules."""


class DGIGAError(Exception):
    """Base class for all errors raised by this package."""


class KnotDomainError(DGIGAError, ValueError):
    """A parameter value lies outside the parametric interval [0, 1]."""


class DegreeError(DGIGAError, ValueError):
    """Requested derivative order exceeds the spline degree."""


class ConfigError(DGIGAError, ValueError):
    """Invalid run, assembly or problem configuration."""


class GeometryError(DGIGAError):
    """Invalid or degenerate patch geometry."""


class SingularGeometryError(GeometryError):
    """The geometry map has a (near) vanishing Jacobian determinant."""

    def __init__(self, message, patch=None, point=None):
        super().__init__(message)
        self.patch = patch
        self.point = point


class TopologyError(GeometryError):
    """Inconsistent multipatch topology or interface orientation data."""


class SolverError(DGIGAError):
    """The linear solver failed to reach the requested tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual
