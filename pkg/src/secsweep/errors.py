"""Exception types shared across the toolkit."""


class SecsweepError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(SecsweepError, ValueError):
    """Operands have incompatible or unexpected shapes."""


class NonFiniteError(SecsweepError, FloatingPointError):
    """A public operation produced NaN or Inf."""


class DegenerateLogitsError(SecsweepError, ValueError):
    """Logit spread too small for a ratio loss denominator."""

    def __init__(self, message, sample_indices=None):
        super().__init__(message)
        self.sample_indices = list(sample_indices) if sample_indices is not None else []


class DataFormatError(SecsweepError, ValueError):
    """A dataset file failed structural validation."""


class CheckpointError(SecsweepError, ValueError):
    """A checkpoint file failed structural validation."""


class TrainingDivergedError(SecsweepError, ArithmeticError):
    """Training produced a non-finite loss."""


class ConfigError(SecsweepError, ValueError):
    """Invalid experiment configuration."""
