"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes do not line up."""


class DegenerateInputError(ValueError):
    """Input is valid in type but cannot be processed (e.g. an all-zero codeword)."""


class StateError(RuntimeError):
    """An operation was called out of order, e.g. backward before forward."""


class NumericError(FloatingPointError):
    """NaN or Inf appeared where finite values are required."""


class TrainingDivergedError(NumericError):
    """Training loss became non-finite."""


class ConfigurationError(ValueError):
    """Experiment or algorithm parameters are inconsistent."""


class CheckpointError(ValueError):
    """A checkpoint file could not be parsed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CheckpointVersionError(CheckpointError):
    """Checkpoint header carries an unsupported format version."""
