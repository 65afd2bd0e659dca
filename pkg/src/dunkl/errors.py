"""Exception types raised by the dunkl package.

All of them derive from ValueError so command-line callers can report bad
parameters and unsupported regimes through a single handler.
"""


class DunklError(ValueError):
    """Base class for dunkl errors."""


class DomainError(DunklError):
    """An argument lies outside the domain of a function."""


class ParityError(DunklError):
    """Multiplicities do not match the parity of the dihedral order."""


class RegimeError(DunklError):
    """Multiplicities fall outside the regime a formula covers."""


class NonConvergenceError(DunklError):
    """A series did not meet its stopping rule within the term budget."""

    def __init__(self, message: str, terms_used: int = 0):
        super().__init__(message)
        self.terms_used = terms_used


class InversionError(DunklError):
    """The driving clock did not reach the requested process time."""


class DegenerateError(DunklError):
    """A simulated norm collapsed to numeric zero."""
