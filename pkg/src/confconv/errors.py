"""Exception types shared across the package."""


class ConfConvError(Exception):
    """Base class for all package errors."""


class DomainError(ConfConvError):
    """A point lies outside the canonical domain of its background."""


class InvalidTensorError(ConfConvError):
    """An eigenvalue tuple does not describe a positive-definite tensor."""


class UnsupportedOperationError(ConfConvError):
    """The requested operation is not defined for this input combination."""


class ValidationError(ConfConvError):
    """A parameter is outside its admissible range."""


class MissingDistanceFieldError(ConfConvError):
    """A geodesic-ball quantity was requested without a distance field."""


class MeshMismatchError(ConfConvError):
    """Mesh and metric specification live on different backgrounds."""


class InvalidMetricError(ConfConvError):
    """Edge weighting produced a nonpositive length."""


class ConfigError(ConfConvError):
    """An experiment configuration failed validation.

    ``field`` holds the dotted path of the offending key.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class BudgetError(ConfConvError):
    """A mesh exceeded the configured node budget."""
