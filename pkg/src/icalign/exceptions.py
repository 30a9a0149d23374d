import numpy as np


class ContractViolation(ValueError):
    """Input violates a documented precondition (shape, symmetry, rank)."""


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix that must be positive definite is numerically singular.

    ``matrix`` names the offending argument.
    """

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class NumericFailure(RuntimeError):
    """An iterative numeric routine failed; ``diagnostics`` holds details."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
