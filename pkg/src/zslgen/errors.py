"""Exception types shared across the package.

Validation problems subclass ValueError, runtime ordering problems
subclass RuntimeError, so callers who do not care about the fine
distinctions can catch the builtin bases.
"""


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class ConfigError(ValueError):
    """A configuration value is invalid or layer dimensions do not chain."""


class InputError(ValueError):
    """Input data violates a precondition (empty, out of range, non-finite)."""


class FormatError(ValueError):
    """A file is structurally malformed. Carries the byte offset if known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataError(ValueError):
    """A file parsed fine but holds invalid values. Carries the row index."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)
        self.row = row


class StateError(RuntimeError):
    """An operation ran in the wrong order, e.g. backward before forward."""


class TrainingDivergedError(RuntimeError):
    """The training loss became non-finite. Carries the 1-based epoch."""

    def __init__(self, epoch: int, message: str | None = None):
        super().__init__(message or f"training diverged at epoch {epoch}: loss is not finite")
        self.epoch = epoch
