"""Exception hierarchy shared across the package.

Every error carries a stable ``code`` (the class name) so that the CLI and
the HTTP service can report machine-readable failures without string
matching on messages.
"""

from __future__ import annotations


class StemSimError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidInput(StemSimError, ValueError):
    """An argument violates a precondition (shape, range, or type).

    Also a ValueError so generic callers (and standard tooling) can catch
    bad-argument failures without importing this package's hierarchy.
    """


class InvalidVector(InvalidInput):
    """An embedding vector contains NaN or infinite components."""


class DegenerateVector(InvalidInput):
    """A vector has near-zero norm, so its direction is undefined."""


class DimensionMismatch(InvalidInput):
    """Operands disagree on embedding dimension or feature count."""


class ConfigMismatch(InvalidInput):
    """Data does not match the declared stem configuration."""


class InvalidStem(InvalidInput):
    """A stem name is not part of the active configuration."""


class DuplicateRecord(StemSimError):
    """Two records share the same (segment, stem, encoder, source) key."""


class UnsupportedFormat(StemSimError):
    """A file does not start with a known magic string or version."""


class CorruptPack(StemSimError):
    """A pack file is truncated or fails its checksum."""


class ParseError(StemSimError):
    """A text artifact (manifest line, config file) cannot be parsed.

    ``line_numbers`` lists every offending 1-based line when known.
    """

    def __init__(self, message: str, line_numbers: list[int] | None = None):
        super().__init__(message)
        self.line_numbers = list(line_numbers or [])


class PresetParseError(ParseError):
    """A weight preset file is malformed or incomplete."""


class InvalidTriplet(StemSimError):
    """A comparison record violates a structural invariant."""


class MissingStem(StemSimError):
    """A required (segment, stem) embedding is absent from the store.

    ``missing`` lists every absent (segment_id, stem) pair.
    """

    def __init__(self, message: str, missing: list[tuple[str, str]] | None = None):
        super().__init__(message)
        self.missing = list(missing or [])


class EmptyDataset(StemSimError):
    """An operation that needs at least one row received none."""


class SingularSystem(StemSimError):
    """The regression design is numerically rank deficient."""

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class StratificationError(StemSimError):
    """A stratified split cannot satisfy the per-class count constraints."""


class InvalidEntry(StemSimError):
    """A retrieval library entry is malformed."""


class DegenerateQuery(StemSimError):
    """A retrieval query cannot be scored (e.g. all-zero weights)."""


class UnknownSegment(StemSimError):
    """A referenced segment id is not present in the library or store."""


class UnknownDataset(StemSimError):
    """A named triplet dataset is not registered with the service."""
