"""Exception hierarchy shared across the package."""


class PwdLabError(Exception):
    """Base class for all package errors."""


class FamilyMismatchError(PwdLabError, ValueError):
    """Two distribution specs do not share family and structure."""


class DimensionMismatchError(PwdLabError, ValueError):
    """An outcome or context has the wrong length for the scenario."""


class DegenerateGuessError(PwdLabError, ValueError):
    """Labeling probabilities requested for identical guesses (division by zero)."""


class InvalidLabParamsError(PwdLabError, ValueError):
    """Labeling probabilities fall outside [0, 1] for the given guesses."""


class ExactComputationError(PwdLabError, ValueError):
    """An exact probability or error computation is infeasible for the inputs."""


class InsufficientSampleError(PwdLabError, ValueError):
    """A learner was handed fewer observations than its contract requires."""


class BudgetExceededError(PwdLabError, RuntimeError):
    """An oracle draw budget would be exceeded; the pipeline refuses to subsample."""


class EMDivergenceError(PwdLabError, RuntimeError):
    """EM average log-likelihood decreased beyond numerical slack."""


class ConfigError(PwdLabError, ValueError):
    """A scenario configuration is invalid. Carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
