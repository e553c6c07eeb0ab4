"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class RealAugError(Exception):
    exit_code = 1
    code = "error"


class MissingInputError(RealAugError):
    exit_code = 2
    code = "missing_input"


class ValidationError(RealAugError, ValueError):
    exit_code = 3
    code = "validation"


class FormatError(ValidationError):
    code = "format"


class StorageError(RealAugError, OSError):
    exit_code = 4
    code = "io"


class TrainingDivergedError(RealAugError, FloatingPointError):
    exit_code = 3
    code = "diverged"
