"""Exception types shared across the package.

Two families matter to callers: input/usage problems (bad shapes, bad
configuration, malformed files) and numerical/assumption failures (rank
deficiency, vanishing spectral gaps, infeasible selection). The CLI maps the
first family to exit code 2 and the second to exit code 3.
"""

from __future__ import annotations


class GridPcrError(Exception):
    """Base class for all package-specific errors."""


class ConformanceError(GridPcrError, ValueError):
    """Array shapes, dtypes, or values do not conform to the declared space."""


class ConfigurationError(GridPcrError, ValueError):
    """A parameter is outside its documented range or internally inconsistent."""


class CoverageError(ConfigurationError):
    """A mesh fails to cover the unmasked grid cells it must support."""

    def __init__(self, message: str, uncovered=None):
        super().__init__(message)
        self.uncovered = [] if uncovered is None else list(uncovered)


class FormatError(GridPcrError, ValueError):
    """A file does not parse under its declared format.

    ``offset`` is the byte position (binary formats) or row index (tables)
    at which parsing failed, when known.
    """

    def __init__(self, message: str, offset=None):
        super().__init__(message)
        self.offset = offset


class EmptyBasisError(GridPcrError):
    """Whitening removed every basis direction (all Gram eigenvalues ~ 0)."""


class DegenerateDesignError(GridPcrError):
    """The regression design violates the nondegeneracy assumption.

    Raised when the empirical second-moment matrix of the regressors is
    numerically singular, when there are not enough observations, or when a
    treatment arm is empty so the interaction block is inestimable.
    """


class NearMultiplicityError(GridPcrError):
    """Adjacent eigenvalues are too close for a stable spectral-gap expansion."""


class SelectionInfeasibleError(GridPcrError):
    """No component count reaches the requested explained-variance fraction.

    Carries ``achieved``, the fraction explained by all retained components;
    a large shortfall usually signals an inadequate projection basis.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = float(achieved)


class StudyError(GridPcrError):
    """Too many replicates of a resampling study failed to complete.

    ``failures`` is a list of (replicate index, message) pairs.
    """

    def __init__(self, message: str, failures=None):
        super().__init__(message)
        self.failures = [] if failures is None else list(failures)
