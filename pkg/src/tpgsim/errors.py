"""Exception hierarchy.

The CLI maps the four top-level families onto exit codes:
ValidationError -> 2, DomainError -> 3, NoRoot -> 4, NonConvergence -> 5.
"""


class TPGError(Exception):
    """Base class for every error raised by tpgsim."""


class ValidationError(TPGError, ValueError):
    """Malformed input: bad documents, bad arguments, bad units."""


class DomainError(TPGError, ValueError):
    """Well-formed input that falls outside the model's domain."""


class NoRoot(TPGError):
    """A root finder found no sign change in its bracket."""


class NonConvergence(TPGError):
    """An iterative procedure did not reach its tolerance."""


# -- validation ------------------------------------------------------------

class MissingAxis(ValidationError):
    def __init__(self, axis):
        super().__init__(f"crystal document is missing axis {axis!r}")
        self.axis = axis


class MalformedCoefficient(ValidationError):
    pass


class OrderingViolation(ValidationError):
    pass


class EmptyWindow(ValidationError):
    pass


class InvalidAxis(ValidationError):
    pass


class DimensionError(ValidationError, TypeError):
    pass


class ConfigError(ValidationError):
    pass


class DegenerateData(ValidationError):
    pass


# -- domain ----------------------------------------------------------------

class OutOfWindow(DomainError):
    def __init__(self, wavelength, window):
        lo, hi = window
        super().__init__(
            f"wavelength {wavelength * 1e9:.6g} nm outside validity window "
            f"[{lo * 1e9:.6g}, {hi * 1e9:.6g}] nm"
        )
        self.wavelength = wavelength
        self.window = window


class AngleOutOfRange(DomainError):
    pass


class EnergyViolation(DomainError):
    pass


class NonPositiveFrequency(DomainError):
    pass


class WindowCollapse(DomainError):
    pass


class RegimeError(DomainError):
    pass


# -- convergence -----------------------------------------------------------

class StepTooCoarse(NonConvergence):
    pass
