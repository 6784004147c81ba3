"""
Exception types raised by the bellbound core
"""


class BellBoundError(Exception):
    """Base class for every library error"""
    pass


class ValidationError(BellBoundError):
    "Raised when an input violates a shape, range or dimension invariant."
    pass


class CapExceededError(ValidationError):
    "Raised when a strategy count or Hilbert space dimension exceeds its cap."
    pass


class DegenerateFunctionalError(ValidationError):
    "Raised when a Bell functional has b_max = 0 and a ratio would divide by it."
    pass


class DilationError(ValidationError):
    "Raised when a source operator fails its dilation check."
    pass


class TensorPositivityError(BellBoundError):
    "Raised when an operator required to be tensor positive is shown not to be."
    pass


class InfeasibleError(BellBoundError):
    "Raised when the solution for given equations is infeasible (has no solution)."
    pass


class UnboundedError(BellBoundError):
    "Raised when the solution for given equations is unbounded."
    pass


class NonConvergenceError(BellBoundError):
    "Raised when an iterative solver hits its iteration cap."
    pass
