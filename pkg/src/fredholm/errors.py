"""Exception hierarchy.

Every failure the library can signal derives from :class:`FredholmError`, so
callers (and the CLI report writer) can catch one type and read the concrete
class name.
"""


class FredholmError(Exception):
    """Base class for all library errors."""


class BasisMismatch(FredholmError, ValueError):
    pass


class ResolutionMismatch(BasisMismatch):
    pass


class UnboundedSymbol(FredholmError):
    """A multiplier was asked for a norm or tail bound without an envelope."""


class TargetUnreachable(FredholmError):
    pass


class NoSplitFound(FredholmError):
    pass


class KappaOutOfRange(FredholmError, ValueError):
    pass


class ResidualCheckFailed(FredholmError):
    pass


class DegenerateBasis(FredholmError):
    pass


class AmbiguousSingularity(FredholmError):
    """The reduced system is too close to singular to pick a branch."""

    def __init__(self, sigma_min, lower, upper):
        self.sigma_min = sigma_min
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"sigma_min={sigma_min:.3e} lies in the gray zone [{lower:.3e}, {upper:.3e}]"
        )


class CertificationFailed(FredholmError):
    pass


class EquivalenceViolated(FredholmError):
    pass


class RNotInvertible(FredholmError, ValueError):
    pass


class NegativeS(FredholmError, ValueError):
    pass


class InsufficientSupport(FredholmError, ValueError):
    pass


class BootstrapViolated(FredholmError):
    pass


class ParseError(FredholmError, ValueError):
    """Malformed problem text. ``field`` names the offending key."""

    def __init__(self, field, location=None, message=None):
        self.field = field
        self.location = location
        where = f" (line {location})" if location is not None else ""
        super().__init__(message or f"missing or malformed field {field!r}{where}")


class ValidationError(FredholmError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
