"""Exception hierarchy.

Every error carries a short machine-readable ``category`` which the CLI
reports on failure and maps to its exit code.
"""


class PsaLinkError(Exception):
    category = "error"
    exit_code = 1


class ConfigurationError(PsaLinkError, ValueError):
    category = "configuration"
    exit_code = 2


class NumericalInstabilityError(PsaLinkError, ArithmeticError):
    category = "numerical-instability"
    exit_code = 3

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConvergenceError(PsaLinkError, RuntimeError):
    category = "non-convergence"
    exit_code = 4


class FittingError(PsaLinkError, ValueError):
    category = "fitting"
    exit_code = 5


class OutputError(PsaLinkError, OSError):
    category = "io"
    exit_code = 6


class AcceptanceError(PsaLinkError):
    category = "acceptance"
    exit_code = 7


class UsageError(PsaLinkError):
    category = "usage"
    exit_code = 64
