"""Exception taxonomy shared by all modules.

CLI maps ConfigError/DataError/DimensionError/SizeError to exit code 1
(validation), everything else to exit code 2 (runtime failure).
"""


class MialabError(Exception):
    """Base class for all package errors."""


class ConfigError(MialabError):
    """Invalid configuration value or unresolvable symbolic name."""


class DataError(MialabError):
    """Input data violates a precondition (empty corpus, single-class scores...)."""


class DimensionError(MialabError):
    """Shape mismatch between arrays/images."""


class SizeError(MialabError):
    """Not enough records to satisfy a requested count or ratio."""


class StorageError(MialabError):
    """Filesystem write/read failure."""


class FormatError(MialabError):
    """Malformed on-disk artifact (bad magic, truncated file...)."""


class IntegrityError(MialabError):
    """Cross-artifact consistency violation (overlapping test sets...)."""


class TrainingError(MialabError):
    """Training diverged or failed; carries the epoch index when known."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch
