"""Exception hierarchy.

Every error maps onto one CLI exit code: validation problems exit with 2,
numeric contract violations with 3 and resource caps with 4.
"""

from __future__ import annotations


class SWTError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ValidationError(SWTError, ValueError):
    exit_code = 2


class DimensionError(ValidationError):
    """Operands act on different numbers of qubits."""


class ModelError(ValidationError):
    """Invalid model parameters (e.g. a chain shorter than four spins)."""


class ContractError(SWTError):
    """A numeric pre- or post-condition does not hold."""

    exit_code = 3


class DegeneracyError(ContractError):
    pass


class AmbiguousWindowError(ContractError):
    """The energy window boundary cuts through a degenerate cluster."""


class SubspaceDimensionError(ContractError):
    pass


class BranchAmbiguityError(ContractError):
    """An eigenphase sits on the branch cut of the square root."""


class SchedulingError(ContractError):
    pass


class BackendUnsupportedError(ContractError):
    """The requested measurement backend cannot evaluate this amplitude."""


class OptimizationAborted(ContractError):
    """The optimizer saw a non-finite cost; ``trace`` holds the partial history."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ResourceError(SWTError):
    exit_code = 4
