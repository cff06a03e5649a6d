"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PkgwatchError(Exception):
    """Base class for all errors raised by this package."""


# --- tarball decoding ---

class CorruptArchive(PkgwatchError):
    """Input is not a readable gzip/tar stream or contains unsafe entries."""


class MissingManifest(PkgwatchError):
    """No package.json at the package root."""


class ManifestParseError(PkgwatchError):
    """package.json exists but is not well-formed JSON."""


# --- versioning ---

class VersionParseError(PkgwatchError):
    """Version string does not follow the semantic-versioning grammar."""


class UnknownVersion(PkgwatchError):
    """Version not present in the timeline / store being queried."""


class NegativeInterval(PkgwatchError):
    """Publication timestamps out of order."""


# --- vectorization ---

class InconsistentFirstVersion(PkgwatchError):
    """First-version preconditions violated (prev/update_type/dt disagree)."""


# --- classifiers ---

class EmptyDataset(PkgwatchError):
    """Training requires at least one row."""


class SingleClassError(PkgwatchError):
    """Two-class training data contains only one class."""


class SchemaMismatch(PkgwatchError):
    """Row schema does not match the schema a model was trained with."""


class ConvergenceFailure(PkgwatchError):
    """Iterative solver exhausted its iteration budget."""


class TooFewSamples(PkgwatchError):
    """Not enough samples per class for the requested operation."""


# --- registry client ---

class NotFound(PkgwatchError):
    """Package or version does not exist at the source."""


class TransportError(PkgwatchError):
    """Network failure or timeout after retries."""


class MalformedDocument(PkgwatchError):
    """Registry response body could not be parsed."""


class IntegrityMismatch(PkgwatchError):
    """Downloaded tarball does not match its declared digest."""
