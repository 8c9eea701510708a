"""Exception hierarchy shared by every selfsim module."""


class SelfSimError(Exception):
    """Base class for all selfsim errors."""


class InvalidArgument(SelfSimError, ValueError):
    """An argument violates an operation's precondition."""


class PoleEvaluationError(SelfSimError, ArithmeticError):
    """A transfer function was evaluated at (or numerically on) a pole."""


class CoefficientOverflow(SelfSimError, ArithmeticError):
    """Transfer-function coefficients left the double-precision range."""


class UnsupportedReduction(SelfSimError):
    """A basis-function power >= 2 has no defining relation to reduce it."""


class UnsupportedBasis(SelfSimError):
    """The operation is only defined for a different kind of basis."""


class SingularFrequencyError(SelfSimError, ArithmeticError):
    """The assembled network equations are singular at the requested frequency."""


class NoSolutionError(SelfSimError):
    """A constant-solving problem has no admissible (positive) solution."""


class ConfigError(SelfSimError, ValueError):
    """A run configuration failed validation; ``field`` names the offending entry."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
