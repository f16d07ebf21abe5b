"""Exception types shared across the pipeline."""


class AuditError(Exception):
    """Base class for all errors raised by this package."""


class MalformedRecordError(AuditError):
    """A dump record failed to parse; carries file, line and field context."""

    def __init__(self, path, line_no, field, message):
        self.path = str(path)
        self.line_no = line_no
        self.field = field
        super().__init__(f"{self.path}:{line_no}: field {field!r}: {message}")


class IntegrityError(AuditError):
    """A foreign id does not resolve inside the corpus."""

    def __init__(self, message, offenders=()):
        self.offenders = list(offenders)
        super().__init__(message)


class DanglingReferenceError(AuditError):
    """An explicitly declared reference points at a missing entity."""


class UndefinedStatisticError(AuditError):
    """A statistic was requested on data where it has no value."""


class DegenerateInputError(AuditError):
    """Numerically degenerate input (zero vector, dimension mismatch, ...)."""


class NonConvergenceError(AuditError):
    """The optimizer did not reach the gradient tolerance in time."""

    def __init__(self, message, iterations, grad_norm):
        self.iterations = iterations
        self.grad_norm = grad_norm
        super().__init__(message)


class IllPosedError(AuditError):
    """The optimization problem has no unique solution as posed."""


class MatrixAssemblyError(AuditError):
    """A design matrix could not be assembled; names column and row id."""


class StageError(AuditError):
    """A pipeline stage failed; wraps the underlying cause with the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
