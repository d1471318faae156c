"""Exception hierarchy shared across the analyzer."""

from __future__ import annotations


class VibeguardError(Exception):
    """Base class for all analyzer errors."""


# -- syntax ------------------------------------------------------------------

class InvalidEncoding(VibeguardError):
    """Input bytes are not valid UTF-8."""


class InputTooLarge(VibeguardError):
    """Input file exceeds the configured maximum size."""


class SpanOutOfBounds(VibeguardError):
    """A span does not lie within its file."""


# -- spec store --------------------------------------------------------------

class StorageFailure(VibeguardError):
    """Reading or writing the spec store failed."""


class SchemaVersionMismatch(StorageFailure):
    """Persisted store uses a schema version this build does not speak."""


class StoreIntegrityError(StorageFailure):
    """A persisted record's content hash does not match its fields."""

    def __init__(self, record_id: str, message: str) -> None:
        super().__init__(message)
        self.record_id = record_id


class IllegalTransition(VibeguardError):
    """Requested status change is not allowed by the record lifecycle."""


class UnknownId(VibeguardError):
    """No record with the given id exists in the store."""


# -- detectors ---------------------------------------------------------------

class NameCollision(VibeguardError):
    """A proposed union name collides with an existing top-level name."""


# -- verification ------------------------------------------------------------

class OracleUnavailable(VibeguardError):
    """The configured compiler oracle command cannot be invoked."""


class OracleTimeout(VibeguardError):
    """The compiler oracle did not finish within its time limit."""


# -- fix generation ----------------------------------------------------------

class UnfixableScope(VibeguardError):
    """The record's anchor no longer resolves; no fix can be planned."""


class AmbiguousFix(VibeguardError):
    """No deterministic fix exists (e.g. sibling cases share no pattern)."""


class StaleSnapshot(VibeguardError):
    """Workspace content changed since the fix plan was produced."""


class PostEditParseFailure(VibeguardError):
    """An applied edit produced a file with new parse warnings; rolled back."""


class RegressionDetected(VibeguardError):
    """Applying a fix regressed other accepted records; rolled back."""

    def __init__(self, regressed_ids: list[str]) -> None:
        super().__init__(f"fix regressed records: {', '.join(regressed_ids)}")
        self.regressed_ids = regressed_ids


# -- sidecar -----------------------------------------------------------------

class WorkspaceUnreadable(VibeguardError):
    """The hook event references files outside or missing from the workspace."""


class StoreCorrupt(VibeguardError):
    """The on-disk spec store cannot be loaded."""
