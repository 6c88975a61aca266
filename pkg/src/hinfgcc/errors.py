"""Exception hierarchy. The CLI maps these onto process exit codes."""


class HinfgccError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(HinfgccError):
    """Input contains non-finite entries or is otherwise unusable."""


class DimensionError(HinfgccError):
    """Matrix or vector dimensions are inconsistent."""


class AssumptionError(HinfgccError):
    """A plant violates a hard modeling assumption (named in the message)."""


class CapacityError(HinfgccError):
    """Vertex enumeration would exceed the configured cap."""


class NotPsdError(HinfgccError):
    """A matrix required to be positive semidefinite is not."""


class SingularSystemError(HinfgccError):
    """A linear system expected to be positive definite failed to factorize."""


class NumericalError(HinfgccError):
    """An iterative numerical routine (eigensolver) failed to converge."""


class ExtractionError(HinfgccError):
    """Gain extraction failed because the state block of W is near singular."""


class SchemaError(HinfgccError):
    """A problem or gain file does not match the documented schema."""
