"""Batch auditing of group-fairness disparities in peer-review decision data."""

__version__ = "0.1.0"

from revaudit.errors import (
    AuditError,
    DanglingReferenceError,
    DegenerateInputError,
    IllPosedError,
    IntegrityError,
    MalformedRecordError,
    MatrixAssemblyError,
    NonConvergenceError,
    StageError,
    UndefinedStatisticError,
)

__all__ = [
    "AuditError",
    "DanglingReferenceError",
    "DegenerateInputError",
    "IllPosedError",
    "IntegrityError",
    "MalformedRecordError",
    "MatrixAssemblyError",
    "NonConvergenceError",
    "StageError",
    "UndefinedStatisticError",
    "__version__",
]
