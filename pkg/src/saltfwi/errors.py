"""Exception and warning types shared across the package."""


class SaltFwiError(Exception):
    """Base class for all package errors."""


class InvalidBackgroundError(SaltFwiError):
    """Background parameters produce a non-positive velocity somewhere."""


class FactorizationError(SaltFwiError):
    """Direct factorization of a Helmholtz system failed."""

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class SolveError(SaltFwiError):
    """A linear solve produced non-finite values or mismatched shapes."""


class NoiseScaleError(SaltFwiError):
    """Noise cannot be scaled to the requested SNR (zero data cube)."""


class DegenerateLevelSetError(SaltFwiError):
    """Level-set field is constant; the adaptive transition width is undefined."""


class DerivativeUndefinedError(SaltFwiError):
    """Smoothed-step derivative requested at zero transition width."""


class EmptyLevelSetInitError(SaltFwiError):
    """No basis node falls inside the requested initialization region."""


class UndefinedMetricError(SaltFwiError):
    """Metric denominator is zero (e.g. starting model already fits the data)."""


class ConfigError(SaltFwiError):
    """Run configuration failed schema validation."""


class EmptySaltWarning(UserWarning):
    """Salt shape does not intersect the grid; model equals the background."""


class DispersionWarning(UserWarning):
    """Fewer than 4 grid points per wavelength; expect strong numerical dispersion."""
