"""Exception hierarchy.

All library errors derive from :class:`QouError`. Raise sites pass the
originating module so messages that surface through the CLI stay
module-qualified, e.g. ``[noise] embedding failed ...``.
"""


class QouError(Exception):
    """Base class for all library errors."""

    def __init__(self, msg, *, module=None):
        super().__init__(msg)
        self.module = module

    def __str__(self):
        msg = super().__str__()
        return f"[{self.module}] {msg}" if self.module else msg


class ParameterError(QouError, ValueError):
    """A model parameter lies outside its admissible domain."""


class GridError(QouError, ValueError):
    """Inconsistent or invalid time grid."""


class NumericError(QouError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class TruncationError(QouError, ValueError):
    """A truncation horizon is too short for the requested tolerance.

    ``suggested`` holds a horizon that would meet the tolerance, when one
    can be estimated.
    """

    def __init__(self, msg, *, suggested=None, module=None):
        super().__init__(msg, module=module)
        self.suggested = suggested


class IntegrabilityError(QouError, ValueError):
    """An integrand is not in the required function space."""


class UnsupportedMomentError(QouError, ValueError):
    """A second-moment quantity was requested for an infinite-variance law."""


class DomainError(QouError, ValueError):
    """Input data falls outside what an estimator can handle."""


class PreconditionError(QouError, ValueError):
    """A hypothesis required by a result is violated."""


class UnsupportedSpecError(QouError, ValueError):
    """The requested prediction is not covered for this specification."""


class ConfigError(QouError, ValueError):
    """Invalid experiment configuration."""
