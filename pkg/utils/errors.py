class HarmonicZerosError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HarmonicZerosError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegreeError(DomainError):
    """Degree bounds violated (n >= 1 and 0 <= m <= n)."""


class PhaseBoundaryError(DomainError):
    """The regime is undefined exactly at the critical point."""


class QuadratureError(HarmonicZerosError):
    """Adaptive quadrature exhausted its subdivision budget."""


class InconsistencyError(HarmonicZerosError):
    """A quantity that must be nonnegative came out negative beyond roundoff."""


class SolverError(HarmonicZerosError):
    pass


class RadiusError(DomainError):
    """Winding circle does not enclose every zero."""
