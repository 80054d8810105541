# File: src/errors.py
"""Exception hierarchy shared by the library and the CLI."""


class CertLabError(Exception):
    """Root of every error raised by this package."""


class ValidationError(CertLabError, ValueError):
    """Invalid input: shapes, ranges, or violated type invariants."""


class DimensionError(ValidationError):
    pass


class NotHermitianError(ValidationError):
    pass


class InvalidStateError(ValidationError):
    pass


class PovmValidationError(ValidationError):
    """Raised when a candidate POVM breaks an invariant.

    The ``invariant`` attribute names which one: "shape", "empty", "psd" or
    "completeness".
    """

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"POVM invariant '{invariant}' violated: {detail}")
        self.invariant = invariant
        self.detail = detail


class NegativeProbabilityError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class BudgetExhaustedError(CertLabError):
    """The copy oracle has no copies left."""


class InsufficientBudgetError(BudgetExhaustedError):
    """A certifier needs more copies than the oracle still holds."""


class InsufficientSamplesError(ValidationError):
    pass


class EnumerationCapError(CertLabError):
    pass


class MicInvariantError(CertLabError):
    pass


class EigenbasisError(CertLabError):
    pass


class AbsoluteContinuityError(CertLabError):
    pass


class ProtocolError(CertLabError):
    pass


class SuiteFailure(CertLabError):
    """At least one invariant suite check failed."""
