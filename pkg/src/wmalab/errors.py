"""Error types raised across the package."""


class LabError(ValueError):
    """Base class; `code` is a short kebab-case tag used in reports and the CLI."""

    code = "error"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InvalidParameter(LabError):
    code = "invalid-parameter"


class InvalidInput(LabError):
    code = "invalid-input"


class ConstructionFailure(LabError):
    code = "construction-failure"


class OutOfRange(LabError):
    code = "out-of-range"


class DegenerateTruncation(LabError):
    code = "degenerate-truncation"


class GridTooNarrow(LabError):
    code = "grid-too-narrow"


class PreconditionViolation(LabError):
    code = "precondition-violation"


class Unsolvable(LabError):
    code = "unsolvable"


class NormalizationError(LabError):
    code = "normalization-error"


class ModelViolation(LabError):
    code = "model-violation"


class NumericalFailure(LabError):
    code = "numerical-failure"
