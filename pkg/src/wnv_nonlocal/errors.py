# Exceptions raised by the package, with the exit code the command line tool uses for each


class WNVError(Exception):
    """
    Base class for all errors raised deliberately by this package.
    """
    exit_code = 1


class ConfigError(WNVError, ValueError):
    """A run configuration could not be parsed or failed validation."""
    exit_code = 2


class ParameterError(WNVError, ValueError):
    """Model parameters violate one or more invariants."""
    exit_code = 3


class KernelMismatchError(WNVError, ValueError):
    """Eigenvalue computations require a single kernel shared by both species."""
    exit_code = 4


class StepSizeError(WNVError, ValueError):
    """A time step exceeds the positivity bound of the explicit scheme."""
    exit_code = 5


class RootSelectionError(WNVError, RuntimeError):
    """Neither (or both) roots of the quadratic system give a positive eigenfunction pair."""
    exit_code = 6


class ConvergenceError(WNVError, RuntimeError):
    """An iteration did not converge within its budget."""
    exit_code = 7


class BracketError(WNVError, ValueError):
    """A search interval does not bracket a sign or verdict change."""
    exit_code = 8
