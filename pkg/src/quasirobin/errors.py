"""Exception hierarchy shared by every module of the package."""


class QuasiRobinError(Exception):
    """Base class for all package errors."""


class ConfigError(QuasiRobinError, ValueError):
    """Invalid or inconsistent problem/solver configuration."""


class GridError(QuasiRobinError, ValueError):
    pass


class QuadratureError(QuasiRobinError):
    pass


class BarrierMissing(QuasiRobinError, ValueError):
    pass


class NotFound(QuasiRobinError):
    pass


class MeshMismatch(QuasiRobinError, ValueError):
    pass


class ZeroFunction(QuasiRobinError, ValueError):
    pass


class NotPositive(QuasiRobinError, ValueError):
    pass


class NotPLaplace(QuasiRobinError, ValueError):
    pass


class PreconditionError(QuasiRobinError, ValueError):
    pass


class NoConvergence(QuasiRobinError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class CoefficientSearchFailed(QuasiRobinError):
    pass


class MonotoneViolation(QuasiRobinError):
    pass


class PathCollapse(QuasiRobinError):
    pass


class BracketError(QuasiRobinError):
    pass
