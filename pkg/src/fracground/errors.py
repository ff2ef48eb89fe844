"""Exception hierarchy shared by all fracground modules."""


class FracgroundError(Exception):
    """Base class for all package errors."""


# --- spectral core ---------------------------------------------------------

class NonHermitianInput(FracgroundError):
    """Spectral coefficients are not Hermitian-symmetric within tolerance."""


class NonFiniteMultiplier(FracgroundError):
    """A Fourier multiplier evaluated to NaN/Inf on the frequency lattice."""


class SupportEscapesBox(FracgroundError):
    """Dilation would move significant mass across the periodic boundary."""


class BadDelta(FracgroundError):
    """Resolvent shift delta0 outside (0, 1)."""


# --- model -----------------------------------------------------------------

class NoAdmissibleConstants(FracgroundError):
    """No (delta0, s1) pair satisfies the small-amplitude bound."""


class BadExponent(FracgroundError):
    """Envelope exponent p0 outside its admissible range."""


class PotentialBelowMinusOne(FracgroundError):
    """Sampled potential V dips to -1 or below."""


class ARConditionViolated(FracgroundError):
    """Superquadratic (Ambrosetti-Rabinowitz) condition fails at a sample."""


class MissingPotentialGradient(FracgroundError):
    """Spatial Pohozaev term requested but no x-gradient is available."""


# --- solvers ---------------------------------------------------------------

class BoxTooSmall(FracgroundError):
    """No admissible negative-energy endpoint fits inside the box."""


class NoSignChange(FracgroundError):
    """Dilation derivative g(t) has no root in the search interval."""


class BadEndpoint(FracgroundError):
    """Mountain-pass endpoint does not have negative energy."""


class LimitProblemFailed(FracgroundError):
    """The translation-invariant limit problem did not produce a state."""


# --- analysis --------------------------------------------------------------

class QuadratureFailure(FracgroundError):
    """Adaptive quadrature did not reach the requested tolerance."""


# --- cli / config ----------------------------------------------------------

class ConfigParse(FracgroundError):
    """Config file could not be parsed (carries line information)."""


class ConfigRange(FracgroundError):
    """A config value is outside its documented range."""

    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else key)
