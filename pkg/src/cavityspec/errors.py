"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """A constructor or operation received a value outside its domain."""


class DegenerateFieldError(ValueError):
    """Mode reconstruction failed because the correlation field is numerically zero."""


class DegenerateSpectrumError(ValueError):
    """A spectrum with no positive samples cannot be normalized."""


class InvalidComparisonError(ValueError):
    """Two spectra share no frequency support."""


class StepSizeError(RuntimeError):
    """The fixed-step integrator could not reach the requested accuracy."""


class ConfigParseError(ValueError):
    """An experiment document is malformed or violates the schema."""


class ExperimentValidationError(ValueError):
    """An experiment document is well formed but physically inconsistent."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
