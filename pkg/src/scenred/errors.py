"""Exception hierarchy.

Every error raised by the library derives from :class:`ScenredError`. The
CLI maps the four families below onto its exit codes.
"""


class ScenredError(Exception):
    """Base class for all library errors."""


# -- validation / input data ------------------------------------------------

class ValidationError(ScenredError, ValueError):
    """Input violates a documented invariant."""


class NonNormalized(ValidationError):
    pass


class NegativeProbability(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NonFiniteEntry(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class EmptySubset(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class InvalidM(ValidationError):
    pass


class MatrixShapeMismatch(ValidationError):
    pass


class InfeasibleMarginals(ValidationError):
    pass


class BudgetExceeded(ValidationError):
    pass


class DegenerateDenominator(ValidationError):
    pass


class InvalidParams(ValidationError):
    pass


class InvalidDrawSpec(ValidationError):
    pass


class DataError(ScenredError):
    """Problem with a data file (missing, malformed, out of bounds)."""


class MissingFile(DataError, FileNotFoundError):
    pass


class SchemaViolation(DataError, ValueError):
    pass


class CapacityExceeded(SchemaViolation):
    pass


class ConfigError(ScenredError, ValueError):
    pass


# -- optimization -----------------------------------------------------------

class SolverFailure(ScenredError, RuntimeError):
    """The backend returned no usable solution."""


class Infeasible(SolverFailure):
    pass


class TimeLimit(SolverFailure):
    pass


class NegativeRegret(SolverFailure):
    """A regret entry fell below the clamp tolerance; the MILP gap is too loose."""


class VerificationFailure(ScenredError, AssertionError):
    def __init__(self, suites):
        self.suites = list(suites)
        super().__init__("verification failed: " + ", ".join(self.suites))
