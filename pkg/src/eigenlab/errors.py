"""Exception taxonomy shared by all eigenlab modules."""


class EigenLabError(Exception):
    """Base class for all eigenlab errors."""


class DomainError(EigenLabError, ValueError):
    """A numeric argument lies outside the mathematical domain of an operation."""


class InvalidDimensionError(DomainError):
    """Dimension argument out of range (n < 2 for model spaces, n < 1 for volumes)."""


class ExponentOrderError(DomainError):
    """Exponent pair violates 0 < p < q."""


class NoFiniteBallError(DomainError):
    """No finite geodesic ball attains the requested eigenvalue (at or below the spectral floor)."""


class GeometryError(EigenLabError):
    """Invalid curve, polygon, or mesh geometry."""


class MeshQualityError(GeometryError):
    """Requested mesh quality could not be reached by refinement."""


class InjectivityError(GeometryError):
    """Conformal map is not certifiably injective on the requested ball."""


class AssemblyError(EigenLabError):
    """Finite element assembly produced an unusable (indefinite / singular) system."""


class SolverError(EigenLabError):
    """Iterative or bracketing solver failed to converge; message carries diagnostics."""


class ConfigurationError(EigenLabError):
    """Inconsistent configuration (mismatched curvature tags, bad experiment options)."""


class FlowError(EigenLabError):
    """A boundary flow lost its structural hypotheses (convexity, monotonicity)."""


class StepSizeError(FlowError):
    """A flow step was too large (self-intersection or displacement above the mesh scale)."""


class InputError(EigenLabError, ValueError):
    """Malformed array or file input."""
