"""Exception types shared across the package."""


class LzerosError(Exception):
    """Base class for all package-specific errors."""


class InvalidDistribution(LzerosError):
    """Energy distribution violates its invariants."""


class NonConvergent(LzerosError):
    """A boundary-phase computation did not converge.

    Typically raised when a zero lies on (or numerically too close to) the
    boundary of the rectangle being probed.  Carries the offending rectangle.
    """

    def __init__(self, message, rect=None):
        super().__init__(message)
        self.rect = rect


class SizeCap(LzerosError):
    """Requested system size exceeds the dense/enumeration cap."""


class DegenerateGroundState(LzerosError):
    """Two lowest eigenvalues coincide; caller must pick a parity sector."""


class OutOfPhase(LzerosError):
    """Parameter lies outside the phase where the formula applies."""


class GaplessMode(LzerosError):
    """Single-particle energy vanishes for the requested momentum."""


class OrthogonalMode(LzerosError):
    """Excitation-amplitude denominator vanishes (orthogonal mode states)."""


class InvalidSpacing(LzerosError):
    """Level spacing becomes non-positive inside the requested index range."""


class OutOfValidity(LzerosError):
    """Complex-time point lies outside the convergence half-plane."""


class SingularK(LzerosError):
    """First-order trajectory coefficient has a vanishing denominator."""


class IllConditioned(LzerosError):
    """Too few usable levels for a stable fit."""


class ConfigError(LzerosError):
    """Run configuration is missing, malformed, or inconsistent."""
