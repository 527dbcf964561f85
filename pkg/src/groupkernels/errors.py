"""Exception types shared across the package.

Caller-misuse errors (bad shapes, unsorted or duplicate sites, points
outside the kernel domain, malformed files) are kept distinct from
mathematical failures (singular Grams, rank-deficient constraints, solver
non-convergence): the latter describe properties of the data, not of the
call, and the command line maps them to a different exit code.
"""


class GroupKernelsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GroupKernelsError):
    """A point lies outside the kernel's open domain interval."""


class DuplicateCenterError(GroupKernelsError):
    """Centers must be pairwise distinct (exact representation equality)."""


class OrderError(GroupKernelsError):
    """Centers were required to be strictly increasing but are not."""


class ShapeError(GroupKernelsError):
    """Block counts or dimensions do not match the expected layout."""


class SingularError(GroupKernelsError):
    """A linear system is numerically singular.

    Carries the offending center set when raised while scanning random
    configurations.
    """

    def __init__(self, message, centers=None):
        super().__init__(message)
        self.centers = centers


class RankError(GroupKernelsError):
    """An equality-constraint system is rank deficient."""


class NonconvergenceError(GroupKernelsError):
    """An iterative solver exhausted its budget before reaching tolerance."""

    def __init__(self, message, iterations=None, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = residuals


class DataFormatError(GroupKernelsError):
    """A data file (CSV/JSON) is malformed; message names row and column."""
