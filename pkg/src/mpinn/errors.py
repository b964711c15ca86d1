"""Exception types shared across the package.

Each class carries a short ``category`` slug so callers (notably the CLI)
can report machine-distinguishable failure kinds without string matching.
"""


class MpinnError(Exception):
    category = "error"


class ValidationError(MpinnError, ValueError):
    """Bad input data, configuration, or arguments."""

    category = "validation"


class MissingColumnError(ValidationError):
    category = "missing-column"


class NonNumericCellError(ValidationError):
    category = "non-numeric-cell"


class NonFiniteCellError(ValidationError):
    category = "non-finite-cell"


class DuplicateNodeError(ValidationError):
    category = "duplicate-node"

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices  # (i, j) positions of the coinciding nodes


class EmptyFileError(ValidationError):
    category = "empty-file"


class RaggedRowError(ValidationError):
    category = "ragged-row"


class DegenerateFieldError(ValidationError):
    category = "degenerate-field"


class ModelFormatError(ValidationError):
    category = "model-format"


class ConfigError(ValidationError):
    category = "config"


class UnsupportedPrimitiveError(MpinnError, TypeError):
    category = "unsupported-primitive"


class TrainingAbort(MpinnError, RuntimeError):
    """Raised when the optimizer encounters a non-finite loss."""

    category = "training-abort"
