"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to, so scripts can
branch on the failure class without parsing messages.
"""


class WaxmanError(Exception):
    exit_code = 1


class UsageError(WaxmanError, ValueError):
    """Invalid arguments: bad dimensions, malformed specs, unknown names."""

    exit_code = 2


class ZeroVector(UsageError):
    pass


class EpsilonInSpectrum(WaxmanError):
    """The energy is not safely below the unperturbed spectrum."""

    exit_code = 3


class SolverError(WaxmanError):
    exit_code = 4


class RayleighZero(SolverError):
    pass


class StartVectorDegenerate(SolverError):
    pass


class RefOrthogonal(SolverError):
    pass


class DegenerateBranch(SolverError):
    pass


class OutOfRange(WaxmanError):
    exit_code = 5


class NonMonotone(WaxmanError):
    exit_code = 6


class TooFewPoints(UsageError):
    pass
