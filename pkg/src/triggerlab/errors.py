"""Exception hierarchy shared across the library.

Domain errors (bad geometry, empty inputs, protocol violations) raise
subclasses of :class:`TriggerLabError` so callers and the CLI can separate
them from programming errors.
"""


class TriggerLabError(Exception):
    """Base class for all domain errors raised by triggerlab."""


class OutOfBoundsError(TriggerLabError):
    """A region exceeds the bounds of the tensor it addresses."""


class ShapeMismatchError(TriggerLabError):
    """Patch and target region dimensions disagree."""


class WrongSpaceError(TriggerLabError):
    """An annotation is in the wrong coordinate space for the operation."""


class EmptyInputError(TriggerLabError):
    """An operation requiring at least one element got none."""


class TooFewRecordsError(TriggerLabError):
    """A dataset transform needs more records than the manifest holds."""


class DimensionMismatchError(TriggerLabError):
    """Two point sets do not share an ambient dimension."""


class MissingTensorError(TriggerLabError):
    """A manifest record references a noise tensor that is not available."""


class BackendFailureError(TriggerLabError):
    """A generation backend failed to produce a usable response."""


class AdapterTimeoutError(BackendFailureError):
    """An external adapter exceeded its wall-clock budget."""


class AdapterExitError(BackendFailureError):
    """An external adapter exited with a nonzero status."""

    def __init__(self, code: int, message: str = ""):
        self.code = code
        super().__init__(message or f"adapter exited with status {code}")


class SchemaViolationError(BackendFailureError):
    """A protocol file does not conform to the documented schema."""
