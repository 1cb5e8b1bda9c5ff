"""Exception hierarchy.

Validation problems (bad parameters, malformed configs, out-of-range
geometry) and numerical failures (singularities, CFL violations, resonant
modes) are kept in separate branches so the CLI can map them to distinct
exit codes.
"""


class NsflowError(Exception):
    """Base class for all package errors."""


class ValidationError(NsflowError):
    """Bad input that should have been caught before any numerics ran."""


class ParameterError(ValidationError):
    pass


class ConfigurationError(ValidationError):
    pass


class OutOfChartError(ValidationError):
    """Point lies outside a boundary chart's extents."""


class FormatError(ValidationError):
    """Malformed snapshot file."""


class UnsupportedVersionError(FormatError):
    pass


class NumericalError(NsflowError):
    """Failure detected while the numerics were running."""


class SingularityError(NumericalError):
    """Kernel evaluated at (or too close to) its singularity."""


class DegenerateDirectionError(NumericalError):
    """<b, xi> = -1: the oblique-kernel integrand denominator vanishes."""


class StepSizeError(NumericalError):
    """Time step violates the CFL guard."""


class SolverError(NumericalError):
    pass


class ResonantModeError(SolverError):
    """A lateral Fourier mode has no unique solution for the given (a, b)."""
