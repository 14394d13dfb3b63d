"""Exception hierarchy shared by all maqed modules."""


class MaqedError(Exception):
    """Base class for all maqed errors."""


class NotSymmetric(MaqedError):
    """Tensor expected to be symmetric is not, beyond tolerance."""


class NegativeEigenvalue(MaqedError):
    """PSD-expected tensor has an eigenvalue below -tol (non-passive input)."""


class NotOrthogonal(MaqedError):
    """Gauge matrix fails A @ A.T = 1."""


class ZeroWavevector(MaqedError):
    """Operation undefined at k = 0."""


class IncompatibleGrid(MaqedError):
    """Field sample grid does not match the box geometry."""


class SingularResonance(MaqedError):
    """Undamped Lorentz pole hit exactly (gamma = 0 and omega^2 in spec(K))."""


class InsufficientHistory(MaqedError):
    """Field history does not cover the requested convolution window."""


class NonPassive(MaqedError):
    """Im chi is not PSD at the requested frequency."""

    def __init__(self, message, omega=None, windows=None):
        super().__init__(message)
        self.omega = omega
        self.windows = windows or []


class TailTruncation(MaqedError):
    """Estimated spectral tail beyond omega_max exceeds the tolerance."""

    def __init__(self, message, estimate=None, tolerance=None):
        super().__init__(message)
        self.estimate = estimate
        self.tolerance = tolerance


class SingularAtDispersion(MaqedError):
    """Laplace point s is a root of det Lambda (a medium-dressed mode)."""


class PoleOnContour(MaqedError):
    """A pole of the transform lies on or outside the inversion contour."""


class DegreeMismatch(MaqedError):
    """Rational transform has numerator degree >= denominator degree."""


class IdentityViolated(MaqedError):
    """Noise-commutator identity deviation above tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MissingKernel(MaqedError):
    """Field evolution requested for a mode without computed kernels."""


class UnsupportedGeometry(MaqedError):
    """Dynamics requested for an inhomogeneous medium (homogeneous bulk only)."""


class ConfigError(MaqedError):
    """Scenario configuration is malformed or violates the schema."""
