"""Exception types shared across the package."""


class TorustileError(Exception):
    """Base class for all torustile errors."""


class ObjFormatError(TorustileError):
    """Malformed OBJ input. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MeshInvalidError(TorustileError):
    """Mesh violates a structural invariant (non-manifold, bad orientation, ...)."""


class TopologyError(TorustileError):
    """Mesh has the wrong topology for the requested operation."""


class MarkError(TorustileError):
    """Marked boundary vertices are missing, repeated, or out of order."""


class CutSystemError(TorustileError):
    """Sphere cut system is invalid (paths not disjoint, sigma not order 3, ...)."""


class SolveError(TorustileError):
    """Linear solve failed to reach the required residual, or the system is singular."""


class ConfigError(TorustileError):
    """CLI / run configuration is inconsistent."""
