class LevyHedgeError(Exception):
    """Base class of every error raised by the library"""


class ModelError(LevyHedgeError, ValueError):
    """A model, payoff or data set does not meet the requirements of an operation"""


class NumericalError(LevyHedgeError, RuntimeError):
    """A numerical procedure could not reach its target accuracy"""


class DivergentExponentialMoment(ModelError):
    def __init__(self, p, message=None):
        self.p = p
        super().__init__(
            message or "exponential moment of order {} is not finite".format(p)
        )


class NonPositiveExponential(ModelError):
    pass


class NotSquareIntegrable(ModelError):
    pass


class DegenerateModel(ModelError):
    pass


class AssumptionViolated(ModelError):
    pass


class NoApplicableCase(ModelError):
    pass


class PreconditionViolated(ModelError):
    pass


class UnsupportedSampler(ModelError):
    pass


class InsufficientPaths(ModelError):
    pass


class InsufficientData(ModelError):
    pass


class ConfigError(ModelError):
    def __init__(self, field, message):
        self.field = field
        super().__init__("{}: {}".format(field, message))


class QuadratureFailure(NumericalError):
    pass


class IndeterminateIndex(NumericalError):
    pass


class CosTruncationError(NumericalError):
    pass


class PathBudgetExhausted(NumericalError):
    pass


class OracleNotConverged(NumericalError):
    pass
