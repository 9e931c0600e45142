"""Exception types raised across the package.

Everything derives from ``LapretError`` so callers (the CLI in particular)
can catch the whole family. Most also derive from ``ValueError`` because
they signal bad input rather than a bug.
"""


class LapretError(Exception):
    pass


class ValidationError(LapretError, ValueError):
    """Input failed a precondition or schema check."""


# core model
class OverlapTooShort(ValidationError):
    pass


class RoleMismatch(ValidationError):
    pass


class InvalidEta(ValidationError):
    pass


# matching
class NoVariation(ValidationError):
    pass


class SingularDesign(LapretError):
    pass


class DimensionMismatch(ValidationError):
    pass


# estimator
class WindowTooShort(ValidationError):
    pass


class DegenerateInput(ValidationError):
    pass


# study pipeline
class TooFewUnits(ValidationError):
    pass


class PilotOverlap(LapretError):
    """Main-study units overlap the pilot sample."""


class EmptyWindow(LapretError):
    pass


# simulation
class UnknownScenario(ValidationError):
    pass


# data generation / ingestion
class TotalTooSmall(ValidationError):
    pass


class NoTreatedDmas(ValidationError):
    pass


class NoControlDmas(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class DuplicateRow(SchemaError):
    pass


class NonContiguousDays(SchemaError):
    pass


class DanglingEvent(SchemaError):
    pass
