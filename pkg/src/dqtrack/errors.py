"""Exception hierarchy shared by every module."""


class DqtrackError(Exception):
    """Base class for all package errors."""


class ContractError(DqtrackError, ValueError):
    """An argument violates a documented precondition (non-unit pose, non-dual-vector, ...)."""


class NormalizationError(ContractError):
    """A quaternion expected to be unit is not, to tolerance."""


class DegeneratePoseError(ContractError):
    """The real part of a dual quaternion is too small to renormalize."""


class DomainError(DqtrackError, ValueError):
    """A parameter lies outside the domain of a closed-form expression."""


class InfeasibleQPError(DqtrackError):
    """The safety-filter QP has no point satisfying every constraint.

    ``best_u`` is the box point that maximizes the worst constraint row and
    ``best_value`` is that row's achievable ``g @ u - rhs`` (negative).
    """

    def __init__(self, message, best_u=None, best_value=None):
        super().__init__(message)
        self.best_u = best_u
        self.best_value = best_value


class SimulationDivergedError(DqtrackError):
    """A derivative evaluation produced NaN or Inf."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(DqtrackError, ValueError):
    """Invalid scenario configuration or CLI input."""
