"""Exception types raised across the package."""


class TopoClustError(Exception):
    """Base class for all package errors."""


class DataFormatError(TopoClustError, ValueError):
    """Malformed input data (CSV contents, labels, coordinates)."""


class DegenerateCloudError(TopoClustError, ValueError):
    """The point cloud has no spatial extent (all points coincide)."""


class FiltrationError(TopoClustError, ValueError):
    """A filtration is not face-closed or is otherwise inconsistent."""


class ConvergenceError(TopoClustError, RuntimeError):
    """An iterative solver failed to converge."""
