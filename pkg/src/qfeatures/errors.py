"""Exception types shared across the package."""

import numpy as np


class InvalidInputError(ValueError):
    """Argument outside the documented domain of an operation."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Linear system has no unique solution."""


class DegenerateKernelError(ValueError):
    """Landmark Gram matrix has no eigenvalue above the rank cutoff."""


class IngestionError(ValueError):
    """Dataset file does not match the expected schema."""


class ConfigError(ValueError):
    """Experiment configuration is infeasible or malformed."""
