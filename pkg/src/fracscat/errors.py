"""Exception types raised by the library.

Every numerical gate that can fail has its own class so callers (and the
command line runner) can map failures to remediation hints.
"""


class FracScatError(Exception):
    """Base class for all library errors."""


class GridError(FracScatError, ValueError):
    """Invalid grid parameters (non power of two, memory cap, ...)."""


class PotentialError(FracScatError, ValueError):
    """Vector potential violates the boundary-smallness contract."""


class FitUnstable(FracScatError):
    """Decay fit impossible, e.g. the profile is identically zero."""


class UnderResolved(FracScatError):
    """Spectral tail of a sampled field is too large for the grid."""


class HermiticityViolation(FracScatError):
    """Assembled operator is not Hermitian to the configured tolerance."""


class NegativeSpectrum(FracScatError):
    """Fractional power requested of an operator with negative spectrum."""


class QuadratureNotConverged(FracScatError):
    """Doubling the quadrature nodes changed the result too much."""


class SingularShift(FracScatError):
    """Resolvent requested at a point of the discrete spectrum."""


class NearSpectrum(FracScatError):
    """Shift lies within the margin of an eigenvalue of the operator."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class NotConverging(FracScatError):
    """Limiting-absorption extrapolation does not settle."""


class ExceptionalShell(FracScatError):
    """A shell needed by the distorted transform is flagged exceptional."""

    def __init__(self, message, energy=None):
        super().__init__(message)
        self.energy = energy


class TailNotDecaying(FracScatError):
    """Cook integrand fails to decay over the final quarter of [0, T]."""


class FluxObstruction(FracScatError):
    """Gauge factor is not single valued on the torus (nonzero mean A)."""


class ConfigError(FracScatError, ValueError):
    """Experiment configuration is malformed."""
