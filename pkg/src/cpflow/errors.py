"""Exception hierarchy shared by all cpflow modules."""


class CPFlowError(Exception):
    """Base class for every error raised by this package."""


class BadFaceError(CPFlowError):
    """A face has a repeated vertex or references a vertex out of range."""


class NonManifoldError(CPFlowError):
    """An edge is not shared by exactly two faces (or a face is duplicated)."""


class DisconnectedLinkError(CPFlowError):
    """The faces around a vertex do not form a single cycle."""


class DomainError(CPFlowError):
    """An input lies outside the mathematical domain of an operation."""


class RangeError(CPFlowError):
    """A radius or length is too large for stable cosh/sinh evaluation."""


class BoundaryError(CPFlowError):
    """A derivative was requested at or beyond a degenerate-triangle boundary."""


class NotAdmissibleError(CPFlowError):
    """The metric violates a triangle inequality in at least one face."""

    def __init__(self, message: str, faces: list[int] | None = None):
        super().__init__(message)
        self.faces = faces or []


class QuadratureError(CPFlowError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NoDescentError(CPFlowError):
    """Line search could not find a descent step in any available direction."""


class MaxIterationsError(CPFlowError):
    """Iteration budget exhausted before reaching the requested tolerance."""


class StepError(CPFlowError):
    """The integrator produced a non-finite state."""


class ConfigError(CPFlowError):
    """Inconsistent or incomplete run configuration."""


class NotFoundError(CPFlowError):
    """A search (root find, multistart solve) exhausted its budget."""


class ParseError(CPFlowError):
    """An input file is malformed or fails validation."""
