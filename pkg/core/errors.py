"""
Exception hierarchy shared by every package.

Each class also derives from the builtin it refines, so ``except ValueError``
and ``except RuntimeError`` written by callers keep working.
"""


class GlobmixError(Exception):
    """Base class for all toolkit errors."""


class ArgumentError(GlobmixError, ValueError):
    """Invalid argument passed to an operation (sample counts, ladders, undeclared averages)."""


class PreconditionError(ArgumentError):
    """An operation's precondition does not hold (e.g. outgoing velocity passed to reflect)."""


class DomainError(GlobmixError, ValueError):
    """A point or parameter lies outside the domain of a map or formula."""


class LatticeError(DomainError):
    """A displacement would leave the lattice Z_+^{d1} x Z^{d2}."""


class ConfigurationError(GlobmixError, ValueError):
    """Experiment or system configuration is inconsistent."""


class HorizonViolationError(GlobmixError, RuntimeError):
    """A free flight exceeded the declared horizon (infinite-horizon configuration)."""

    def __init__(self, message: str, origin=None, direction=None, distance: float = float("inf")):
        super().__init__(message)
        self.origin = origin
        self.direction = direction
        self.distance = distance


class TrapError(GlobmixError, RuntimeError):
    """No collision within the configured event or step budget."""


class IntegrationError(GlobmixError, RuntimeError):
    """Flight integration lost accuracy (energy drift beyond tolerance)."""


class StallError(GlobmixError, RuntimeError):
    """Root search for the next wall collision found nothing within the search horizon."""


class ResourceError(GlobmixError, RuntimeError):
    """A computation would exceed its table or memory budget."""


class SamplerEfficiencyError(GlobmixError, RuntimeError):
    """Rejection sampler acceptance rate fell below the usable threshold."""
