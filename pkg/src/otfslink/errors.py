"""Exception types shared across the package."""


class LinkError(Exception):
    """Base class for all otfslink errors."""


class DimensionError(LinkError):
    """A vector or matrix argument has an incompatible shape."""


class ConfigError(LinkError):
    """Invalid configuration; `key` names the offending entry when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InfeasibleError(LinkError):
    """A structurally valid configuration that cannot be run as requested
    (for example an exact-search detector over too large a hypothesis
    space). Maps to CLI exit code 3."""


class ContractViolationError(LinkError):
    """An input violates a documented precondition (e.g. a matrix passed as
    Hermitian is not)."""


class RankDeficientError(LinkError):
    """A Gram matrix required to be full rank is singular; carries the
    observed rank."""

    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank


class NumericalError(LinkError):
    """An iterative numerical routine failed to converge."""
