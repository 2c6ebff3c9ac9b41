"""Exception types shared across the package."""


class BandPDEError(Exception):
    """Base class for all package-specific errors."""


class OutOfTube(BandPDEError):
    """A point lies outside the region where the closest-point map is smooth."""


class DegenerateFrame(BandPDEError):
    """Singular values of the projection differential are too clustered to
    identify individual tangent directions reliably."""


class BandTooWide(BandPDEError):
    """Requested band reaches past the reach of the closest-point map."""


class EmptyBand(BandPDEError):
    """No lattice node fell inside the requested band."""


class StencilEscapesBand(BandPDEError):
    """An interpolation stencil could not be placed fully inside the band."""


class ZeroNorm(BandPDEError):
    """A normalizing integral fell below the safe threshold."""


class NoConvergence(BandPDEError):
    """An iterative solver did not reach its tolerance."""


class SingularSystem(BandPDEError):
    """A linear system was detected as numerically singular."""


class ComplexLeak(BandPDEError):
    """An eigenvalue expected to be real carried too large an imaginary part."""


class NoRoot(BandPDEError):
    """A transcendental stability relation has no solution of the requested type."""


class BlowUp(BandPDEError):
    """A time-dependent solve exceeded the configured amplitude cap."""


class ConfigError(BandPDEError):
    """An experiment configuration is missing or malformed."""
