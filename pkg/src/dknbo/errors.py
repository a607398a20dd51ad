"""Exception types raised across the package."""


class NotPositiveDefinite(ValueError):
    """A matrix that should be a valid covariance failed to factorize."""


class DimensionMismatch(ValueError):
    """Array shapes are mutually inconsistent."""


class InvalidArchitecture(ValueError):
    """Encoder layer sizes are empty or non-positive."""


class NonFiniteGradient(FloatingPointError):
    """A gradient contains NaN or Inf; training has diverged."""


class NonFiniteState(FloatingPointError):
    """The plant state overflowed during integration."""


class TrainingFailed(RuntimeError):
    """Optimisation could not make progress (too many failed steps)."""


class DegenerateScale(ValueError):
    """Label range is too small to build a scaler."""


class EmptyCandidates(ValueError):
    """The acquisition was asked to choose from zero candidates."""


class EvaluationFailed(RuntimeError):
    """The objective callback raised during a BO iteration."""


class LengthMismatch(ValueError):
    """Histories being aggregated have different lengths."""
