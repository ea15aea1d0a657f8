"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: usage errors are handled by
click itself (exit 2), DataError and its subclasses exit 3, ModelError
exits 4.
"""


class FwactionError(Exception):
    """Base class for all package errors."""


class DataError(FwactionError):
    """Malformed input data: bad CSV, schema mismatch, unknown labels."""


class ArtifactError(DataError):
    """A stored model artifact cannot be used."""


class CorruptArtifactError(ArtifactError):
    """Checksum verification failed on load."""


class VersionError(ArtifactError):
    """The artifact declares an unsupported format version."""


class CompatibilityError(ArtifactError):
    """The artifact's label map or payload shape is incompatible."""


class ModelError(FwactionError):
    """Numeric or statistical preconditions violated (degenerate splits,
    single-class training data, k larger than the training set, ...)."""
