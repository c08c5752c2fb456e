"""Exception types raised across the package.

Each class carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class GdseError(Exception):
    """Base class for all package errors."""

    exit_code = 3
    kind = "error"


class ConfigError(GdseError):
    exit_code = 2
    kind = "config"


class InvalidGeometryError(GdseError):
    exit_code = 2
    kind = "invalid-geometry"


class InvalidInputError(GdseError):
    exit_code = 3
    kind = "invalid-input"


class ResourceError(GdseError):
    exit_code = 4
    kind = "resource"


class NumericError(GdseError):
    exit_code = 3
    kind = "numeric"


class IllConditionedError(NumericError):
    kind = "ill-conditioned"


class RefinementRequired(NumericError):
    """Phase summation did not settle on an integer; retry with more samples."""

    kind = "refinement-required"


class UndefinedValueError(NumericError):
    kind = "undefined-value"


class BandSelectionError(NumericError):
    kind = "band-selection"


class NoPeriodError(NumericError):
    kind = "no-period"


class StepSizeError(NumericError):
    kind = "step-size"


class InsufficientDataError(NumericError):
    kind = "insufficient-data"


class GBZToleranceError(NumericError):
    kind = "gbz-tolerance"


class NotDoubleWellError(NumericError):
    kind = "not-a-double-well"


class SaddlePointError(NumericError):
    kind = "saddle-point"


class DivergenceRiskError(NumericError):
    kind = "divergence-risk"


class ResolutionError(NumericError):
    kind = "resolution"
