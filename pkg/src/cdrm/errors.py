"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed argument: dimension mismatch, empty batch, bad config value."""


class TrainingDivergenceError(RuntimeError):
    """Loss or gradients became non-finite during training."""


class SamplingFailureError(RuntimeError):
    """A Langevin chain produced a non-finite gradient."""


class DegenerateDatasetError(ValueError):
    """Dataset admits no usable density statistics (zero spread)."""


class EmptyValidSetError(LookupError):
    """Operation requires at least one valid candidate."""


class UnpreparedModelError(RuntimeError):
    """Model is missing state required for inference (e.g. density stats)."""


class OutOfBoundsError(ValueError):
    """A point lies outside the declared bounds."""


class DatasetFormatError(ValueError):
    """Dataset file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFormatError(ValueError):
    """Model file is malformed or fails its embedded self-check."""


class UnsupportedVersionError(ValueError):
    """Serialized artifact uses a schema this build does not understand."""


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given label distribution."""
